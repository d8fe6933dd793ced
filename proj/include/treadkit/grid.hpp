#pragma once

#include <treadkit/errors.hpp>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace treadkit {

/// Row-major 2-D raster. Value type only; every operation returns a new grid.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;

    Grid(int width, int height, T fill = T{})
        : width_(checked_dim(width)), height_(checked_dim(height)),
          data_(static_cast<std::size_t>(width_) * height_, fill) {}

    Grid(int width, int height, std::vector<T> data)
        : width_(checked_dim(width)), height_(checked_dim(height)), data_(std::move(data)) {
        if (data_.size() != static_cast<std::size_t>(width_) * height_) {
            throw ArgumentError("grid data length does not match width x height");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
    }

private:
    static int checked_dim(int d) {
        if (d < 0) throw ArgumentError("grid dimensions must be non-negative");
        return d;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Boolean raster stored as bytes (0 / 1). The tag keeps region masks and
/// shoeprints from being mixed up silently; convert explicitly when intended.
template <typename Tag>
class BinaryGrid : public Grid<std::uint8_t> {
public:
    using Grid<std::uint8_t>::Grid;

    BinaryGrid() = default;
    explicit BinaryGrid(Grid<std::uint8_t> g) : Grid<std::uint8_t>(std::move(g)) {}

    template <typename OtherTag>
    explicit BinaryGrid(const BinaryGrid<OtherTag>& other)
        : Grid<std::uint8_t>(other.width(), other.height(), other.data()) {}

    bool test(int x, int y) const { return (*this)(x, y) != 0; }

    std::size_t count() const {
        return static_cast<std::size_t>(
            std::count_if(data().begin(), data().end(), [](std::uint8_t v) { return v != 0; }));
    }

    bool any() const {
        return std::any_of(data().begin(), data().end(), [](std::uint8_t v) { return v != 0; });
    }
};

struct RegionTag {};
struct PrintTag {};

using Rgb = std::array<double, 3>;

/// Single-channel float field (prints, intermediate fields).
using GrayGrid = Grid<double>;
/// Depth field; lower values are closer to the ground (contact).
using DepthGrid = GrayGrid;
/// RGB image with channels in [0, 1].
using RgbGrid = Grid<Rgb>;
/// Validity mask delimiting the shoe-tread.
using RegionMask = BinaryGrid<RegionTag>;
/// Binary shoeprint, true = leaves a print.
using PrintMask = BinaryGrid<PrintTag>;

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ArgumentError(std::string(what) + ": dimension mismatch (" +
                            std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                            " vs " + std::to_string(b.width()) + "x" +
                            std::to_string(b.height()) + ")");
    }
}

inline RegionMask full_mask(int width, int height) { return RegionMask(width, height, 1); }

} // namespace treadkit
