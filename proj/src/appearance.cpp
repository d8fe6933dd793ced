#include <treadkit/appearance.hpp>

#include <treadkit/errors.hpp>
#include <treadkit/imaging.hpp>
#include <treadkit/parallel.hpp>
#include <treadkit/random.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>
#include <unordered_map>

namespace treadkit {

namespace {

// Linear sRGB -> XYZ (D65). The white point is the image of RGB (1, 1, 1) and
// the inverse is computed from the same matrix, so white maps to L = 100 and
// the two conversions invert each other to rounding.
const Eigen::Matrix3d& rgb_to_xyz() {
    static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.4124564, 0.3575761, 0.1804375,
                                      0.2126729, 0.7151522, 0.0721750,
                                      0.0193339, 0.1191920, 0.9503041).finished();
    return m;
}

const Eigen::Matrix3d& xyz_to_rgb() {
    static const Eigen::Matrix3d m = rgb_to_xyz().inverse();
    return m;
}

const Eigen::Vector3d& white_xyz() {
    static const Eigen::Vector3d w = rgb_to_xyz() * Eigen::Vector3d::Ones();
    return w;
}

constexpr double kEps = 216.0 / 24389.0;  // (6/29)^3
constexpr double kKappa = 24389.0 / 27.0;

double srgb_decode(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double srgb_encode(double c) {
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) { return t > kEps ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

double lab_f_inv(double f) {
    const double t = f * f * f;
    return t > kEps ? t : (116.0 * f - 16.0) / kKappa;
}

bool lex_less(const double* a, const double* b, int dim) {
    for (int k = 0; k < dim; ++k) {
        if (a[k] < b[k]) return true;
        if (b[k] < a[k]) return false;
    }
    return false;
}

bool lex_equal(const double* a, const double* b, int dim) {
    for (int k = 0; k < dim; ++k) {
        if (a[k] != b[k]) return false;
    }
    return true;
}

double sq_dist(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

// Uniform grid over points with cell size `cell`. Keys are hashes of the
// integer cell coordinates; a hash collision only adds candidates, which the
// caller filters by distance, so correctness does not depend on the hash.
class CellIndex {
public:
    CellIndex(int dim, double cell) : dim_(dim), cell_(cell) {
        offsets_ = 1;
        for (int k = 0; k < dim; ++k) offsets_ *= 3;
    }

    // Brute force pays off when the 3^dim neighbourhood is bigger than the set.
    bool usable(std::size_t n) const { return dim_ <= 8 && offsets_ < n; }

    void insert(const double* p, std::uint32_t id) { buckets_[key_of(p, nullptr)].push_back(id); }

    // Visits candidates in the neighbouring cells (each id at most once, in a
    // fixed order that depends only on the indexed points).
    template <typename Fn>
    void for_candidates(const double* p, Fn&& fn) const {
        std::vector<std::int64_t> base(dim_);
        for (int k = 0; k < dim_; ++k) base[k] = cell_coord(p[k]);
        std::vector<std::uint64_t> keys;
        keys.reserve(offsets_);
        std::vector<std::int64_t> c(dim_);
        for (std::size_t o = 0; o < offsets_; ++o) {
            std::size_t r = o;
            for (int k = 0; k < dim_; ++k) {
                c[k] = base[k] + static_cast<std::int64_t>(r % 3) - 1;
                r /= 3;
            }
            keys.push_back(hash(c));
        }
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        for (std::uint64_t key : keys) {
            auto it = buckets_.find(key);
            if (it == buckets_.end()) continue;
            for (std::uint32_t id : it->second) fn(id);
        }
    }

private:
    std::int64_t cell_coord(double v) const {
        const double c = std::floor(v / cell_);
        return static_cast<std::int64_t>(std::clamp(c, -1e15, 1e15));
    }

    std::uint64_t key_of(const double* p, std::vector<std::int64_t>* out) const {
        std::vector<std::int64_t> c(dim_);
        for (int k = 0; k < dim_; ++k) c[k] = cell_coord(p[k]);
        if (out) *out = c;
        return hash(c);
    }

    static std::uint64_t hash(const std::vector<std::int64_t>& c) {
        std::uint64_t h = 0x9E3779B97F4A7C15ull;
        for (std::int64_t v : c) {
            std::uint64_t x = static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
            x ^= x >> 30;
            x *= 0xBF58476D1CE4E5B9ull;
            x ^= x >> 27;
            x *= 0x94D049BB133111EBull;
            x ^= x >> 31;
            h ^= x;
        }
        return h;
    }

    int dim_;
    double cell_;
    std::size_t offsets_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
};

} // namespace

Rgb srgb_to_lab(const Rgb& c) {
    const double r = srgb_decode(c[0]);
    const double g = srgb_decode(c[1]);
    const double b = srgb_decode(c[2]);
    const Eigen::Vector3d xyz = rgb_to_xyz() * Eigen::Vector3d(r, g, b);
    const Eigen::Vector3d& w = white_xyz();
    const double fx = lab_f(xyz[0] / w[0]);
    const double fy = lab_f(xyz[1] / w[1]);
    const double fz = lab_f(xyz[2] / w[2]);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Rgb lab_to_srgb(const Rgb& lab) {
    const double fy = (lab[0] + 16.0) / 116.0;
    const double fx = fy + lab[1] / 500.0;
    const double fz = fy - lab[2] / 200.0;
    const Eigen::Vector3d& w = white_xyz();
    const Eigen::Vector3d xyz(w[0] * lab_f_inv(fx), w[1] * lab_f_inv(fy), w[2] * lab_f_inv(fz));
    const Eigen::Vector3d rgb = xyz_to_rgb() * xyz;
    return {srgb_encode(rgb[0]), srgb_encode(rgb[1]), srgb_encode(rgb[2])};
}

MeanShiftResult mean_shift(const PointSet& points, double bandwidth,
                           const MeanShiftOptions& options) {
    if (points.dim <= 0) throw ArgumentError("mean_shift: dimension must be positive");
    if (points.coords.size() % static_cast<std::size_t>(points.dim) != 0) {
        throw ArgumentError("mean_shift: coordinate count is not a multiple of the dimension");
    }
    const std::size_t n = points.size();
    if (n == 0) throw ArgumentError("mean_shift: no points");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw ArgumentError("mean_shift: bandwidth must be positive");
    }
    if (options.max_iterations < 1) throw ArgumentError("mean_shift: max_iterations must be >= 1");
    for (double v : points.coords) {
        if (!std::isfinite(v)) throw ArgumentError("mean_shift: non-finite coordinate");
    }
    const int dim = points.dim;
    const auto D = static_cast<std::size_t>(dim);

    // Canonical order + duplicate collapsing; everything below only sees the
    // multiset of points, which makes the result independent of input order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lex_less(points.at(a), points.at(b), dim);
    });
    std::vector<double> uniq;
    std::vector<double> weight;
    std::vector<std::uint32_t> unique_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = points.at(order[i]);
        if (weight.empty() || !lex_equal(p, uniq.data() + (weight.size() - 1) * D, dim)) {
            uniq.insert(uniq.end(), p, p + dim);
            weight.push_back(0.0);
        }
        weight.back() += 1.0;
        unique_of[order[i]] = static_cast<std::uint32_t>(weight.size() - 1);
    }
    const std::size_t m = weight.size();

    CellIndex index(dim, bandwidth);
    const bool use_index = index.usable(m);
    if (use_index) {
        for (std::size_t u = 0; u < m; ++u) index.insert(uniq.data() + u * D, static_cast<std::uint32_t>(u));
    }

    const double bw2 = bandwidth * bandwidth;
    const double tol2 = options.tolerance * options.tolerance;
    std::vector<double> conv(uniq);
    parallel_for(
        m,
        [&](std::size_t u) {
            double* y = conv.data() + u * D;
            std::vector<double> mean(D);
            for (int it = 0; it < options.max_iterations; ++it) {
                std::fill(mean.begin(), mean.end(), 0.0);
                double total = 0.0;
                auto visit = [&](std::uint32_t id) {
                    const double* q = uniq.data() + id * D;
                    if (sq_dist(q, y, dim) > bw2) return;
                    total += weight[id];
                    const double f = weight[id] / total;
                    for (std::size_t k = 0; k < D; ++k) mean[k] += f * (q[k] - mean[k]);
                };
                if (use_index) {
                    index.for_candidates(y, visit);
                } else {
                    for (std::size_t id = 0; id < m; ++id) visit(static_cast<std::uint32_t>(id));
                }
                if (total == 0.0) break;
                const double shift2 = sq_dist(mean.data(), y, dim);
                std::copy(mean.begin(), mean.end(), y);
                if (shift2 < tol2) break;
            }
        },
        options.threads);

    // Merge converged points into modes, scanning in lexicographic order of
    // the converged positions; a point joins the earliest mode whose first
    // member lies within the merge radius.
    const double merge_r = options.merge_fraction * bandwidth;
    const double merge_r2 = merge_r * merge_r;
    std::vector<std::size_t> by_conv(m);
    std::iota(by_conv.begin(), by_conv.end(), std::size_t{0});
    std::sort(by_conv.begin(), by_conv.end(), [&](std::size_t a, std::size_t b) {
        const double* pa = conv.data() + a * D;
        const double* pb = conv.data() + b * D;
        if (lex_less(pa, pb, dim)) return true;
        if (lex_less(pb, pa, dim)) return false;
        return a < b;
    });

    std::vector<double> rep;      // first member per mode
    std::vector<double> centre;   // weighted mean of members
    std::vector<double> support;
    std::vector<std::uint32_t> mode_of_unique(m);
    CellIndex mode_index(dim, merge_r > 0.0 ? merge_r : bandwidth);
    const bool index_modes = dim <= 8 && merge_r > 0.0;
    for (std::size_t u : by_conv) {
        const double* p = conv.data() + u * D;
        std::size_t found = std::numeric_limits<std::size_t>::max();
        auto consider = [&](std::uint32_t id) {
            if (id < found && sq_dist(rep.data() + id * D, p, dim) <= merge_r2) found = id;
        };
        if (index_modes) {
            mode_index.for_candidates(p, consider);
        } else {
            for (std::size_t id = 0; id < support.size(); ++id) consider(static_cast<std::uint32_t>(id));
        }
        if (found == std::numeric_limits<std::size_t>::max()) {
            found = support.size();
            rep.insert(rep.end(), p, p + dim);
            centre.insert(centre.end(), p, p + dim);
            support.push_back(weight[u]);
            if (index_modes) mode_index.insert(p, static_cast<std::uint32_t>(found));
        } else {
            support[found] += weight[u];
            const double f = weight[u] / support[found];
            double* c = centre.data() + found * D;
            for (std::size_t k = 0; k < D; ++k) c[k] += f * (p[k] - c[k]);
        }
        mode_of_unique[u] = static_cast<std::uint32_t>(found);
    }

    const std::size_t modes = support.size();
    std::vector<std::size_t> rank(modes);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        if (support[a] != support[b]) return support[a] > support[b];
        return lex_less(centre.data() + a * D, centre.data() + b * D, dim);
    });
    std::vector<int> new_id(modes);
    MeanShiftResult out;
    out.modes.dim = dim;
    for (std::size_t r = 0; r < modes; ++r) {
        new_id[rank[r]] = static_cast<int>(r);
        const double* c = centre.data() + rank[r] * D;
        out.modes.coords.insert(out.modes.coords.end(), c, c + dim);
        out.support.push_back(static_cast<std::size_t>(support[rank[r]]));
    }
    out.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.assignment[i] = new_id[mode_of_unique[unique_of[i]]];
    return out;
}

void Palette::validate() const {
    if (entries.empty()) throw ArgumentError("palette is empty");
    double sum = 0.0;
    for (const auto& e : entries) {
        if (!(e.proportion > 0.0)) throw ArgumentError("palette proportions must be positive");
        sum += e.proportion;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ArgumentError("palette proportions must sum to 1");
}

Palette extract_palette(const RgbGrid& img, const RegionMask& mask, double bandwidth,
                        std::size_t max_points) {
    require_same_shape(img, mask, "extract_palette");
    if (!mask.any()) throw DataError("extract_palette: mask is empty");
    if (max_points == 0) throw ArgumentError("extract_palette: max_points must be positive");
    const std::size_t n = mask.count();
    const std::size_t stride = (n + max_points - 1) / max_points;

    PointSet pts{3, {}};
    pts.coords.reserve(3 * (n / stride + 1));
    std::size_t j = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (!mask[i]) continue;
        if (j++ % stride != 0) continue;
        pts.coords.insert(pts.coords.end(), img[i].begin(), img[i].end());
    }
    const MeanShiftResult ms = mean_shift(pts, bandwidth);
    const double total = static_cast<double>(pts.size());
    Palette pal;
    for (std::size_t k = 0; k < ms.support.size(); ++k) {
        PaletteEntry e;
        for (int c = 0; c < 3; ++c) e.color[c] = std::clamp(ms.modes.at(k)[c], 0.0, 1.0);
        e.proportion = static_cast<double>(ms.support[k]) / total;
        pal.entries.push_back(e);
    }
    return pal;
}

Grid<int> connected_components(const Grid<int>& labels, int* count) {
    const int w = labels.width();
    const int h = labels.height();
    Grid<int> out(w, h, -1);
    int next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < labels.size(); ++start) {
        if (labels[start] < 0 || out[start] >= 0) continue;
        const int value = labels[start];
        out[start] = next;
        stack.assign(1, start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(i % static_cast<std::size_t>(w));
            const int y = static_cast<int>(i / static_cast<std::size_t>(w));
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int k = 0; k < 4; ++k) {
                if (!labels.contains(nx[k], ny[k])) continue;
                const std::size_t j = labels.index(nx[k], ny[k]);
                if (out[j] >= 0 || labels[j] != value) continue;
                out[j] = next;
                stack.push_back(j);
            }
        }
        ++next;
    }
    if (count) *count = next;
    return out;
}

namespace {

// Marker-based watershed on `height` restricted to `region`: markers are the
// regional maxima (4-connected plateaus with no higher neighbour), flooded
// downhill in order of decreasing height. Labels start at `first_label`.
int watershed_from_maxima(const GrayGrid& height, const std::vector<std::uint8_t>& region,
                          Grid<int>& labels, int first_label) {
    const int w = height.width();
    const int h = height.height();
    auto neighbours = [&](std::size_t i, auto&& fn) {
        const int x = static_cast<int>(i % static_cast<std::size_t>(w));
        const int y = static_cast<int>(i / static_cast<std::size_t>(w));
        if (x > 0) fn(i - 1);
        if (x + 1 < w) fn(i + 1);
        if (y > 0) fn(i - static_cast<std::size_t>(w));
        if (y + 1 < h) fn(i + static_cast<std::size_t>(w));
    };

    std::vector<int> plateau(height.size(), -1);
    std::vector<std::size_t> members;
    std::vector<std::size_t> stack;
    int next = first_label;
    using Entry = std::tuple<double, std::int64_t, std::size_t>;  // height, -sequence, pixel
    std::priority_queue<Entry> queue;
    std::int64_t seq = 0;

    int plateau_id = 0;
    for (std::size_t s = 0; s < height.size(); ++s) {
        if (!region[s] || plateau[s] >= 0) continue;
        const double v = height[s];
        members.assign(1, s);
        stack.assign(1, s);
        plateau[s] = plateau_id;
        bool is_max = true;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            neighbours(i, [&](std::size_t j) {
                if (!region[j]) return;
                if (height[j] > v) is_max = false;
                if (height[j] == v && plateau[j] < 0) {
                    plateau[j] = plateau_id;
                    members.push_back(j);
                    stack.push_back(j);
                }
            });
        }
        ++plateau_id;
        if (!is_max) continue;
        std::sort(members.begin(), members.end());
        for (std::size_t i : members) {
            labels[i] = next;
            queue.emplace(v, -seq++, i);
        }
        ++next;
    }

    while (!queue.empty()) {
        const std::size_t i = std::get<2>(queue.top());
        queue.pop();
        neighbours(i, [&](std::size_t j) {
            if (!region[j] || labels[j] >= 0) return;
            labels[j] = labels[i];
            queue.emplace(height[j], -seq++, j);
        });
    }
    return next - first_label;
}

} // namespace

std::vector<int> assign_palette(const std::vector<std::size_t>& areas, const Palette& palette,
                                std::uint64_t seed) {
    palette.validate();
    const std::size_t k = palette.entries.size();
    std::vector<std::size_t> order(areas.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i - 1)));
        std::swap(order[i - 1], order[j]);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return areas[a] > areas[b]; });

    double total = 0.0;
    for (std::size_t a : areas) total += static_cast<double>(a);
    std::vector<double> deficit(k);
    for (std::size_t c = 0; c < k; ++c) deficit[c] = palette.entries[c].proportion * total;

    std::vector<int> colour(areas.size(), 0);
    for (std::size_t s : order) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
            if (deficit[c] > deficit[best]) best = c;
        }
        colour[s] = static_cast<int>(best);
        deficit[best] -= static_cast<double>(areas[s]);
    }
    return colour;
}

AlbedoMap compose_albedo(const DepthGrid& depth, const RegionMask& mask, const Palette& palette,
                         std::uint64_t seed, const ComposeOptions& options) {
    require_same_shape(depth, mask, "compose_albedo");
    if (palette.entries.empty()) throw ArgumentError("compose_albedo: palette is empty");
    palette.validate();
    if (!mask.any()) throw DataError("compose_albedo: mask is empty");

    double threshold = 0.0;
    if (options.contact_threshold) {
        threshold = *options.contact_threshold;
    } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < depth.size(); ++i) {
            if (!mask[i]) continue;
            lo = std::min(lo, depth[i]);
            hi = std::max(hi, depth[i]);
        }
        threshold = 0.5 * (lo + hi);
    }

    const int w = depth.width();
    const int h = depth.height();
    Grid<int> contact(w, h, -1);
    std::vector<std::uint8_t> rest(depth.size(), 0);
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (!mask[i]) continue;
        if (depth[i] < threshold) {
            contact[i] = 0;
        } else {
            rest[i] = 1;
        }
    }
    int n_contact = 0;
    Grid<int> labels = connected_components(contact, &n_contact);
    const GrayGrid smooth = gaussian_blur(depth, options.watershed_sigma);
    const int n_rest = watershed_from_maxima(smooth, rest, labels, n_contact);
    const int n = n_contact + n_rest;

    std::vector<std::size_t> areas(static_cast<std::size_t>(n), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) ++areas[static_cast<std::size_t>(labels[i])];
    }
    const std::vector<int> colour = assign_palette(areas, palette, seed);

    AlbedoMap out;
    out.segments.labels = labels;
    out.segments.colors.resize(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) out.segments.colors[s] = palette.entries[colour[s]].color;
    out.image = RgbGrid(w, h, Rgb{1.0, 1.0, 1.0});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) out.image[i] = out.segments.colors[static_cast<std::size_t>(labels[i])];
    }
    return out;
}

namespace {

struct Segment {
    std::size_t size = 0;
    Rgb mean{};
    std::set<int> adjacent;
};

double lab_distance(const Rgb& a, const Rgb& b) {
    const double d0 = a[0] - b[0];
    const double d1 = a[1] - b[1];
    const double d2 = a[2] - b[2];
    return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

// Merges small segments into a similar-coloured neighbour until nothing
// changes or the pass limit is hit. Returns the number of passes run.
int refine_segments(Grid<int>& labels, int count, const RgbGrid& lab,
                    const PseudoAlbedoOptions& opt) {
    int passes = 0;
    const int w = labels.width();
    const int h = labels.height();
    while (passes < opt.max_iterations) {
        std::vector<Segment> seg(static_cast<std::size_t>(count));
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const int s = labels[i];
            if (s < 0) continue;
            Segment& g = seg[s];
            ++g.size;
            const double f = 1.0 / static_cast<double>(g.size);
            for (int c = 0; c < 3; ++c) g.mean[c] += f * (lab[i][c] - g.mean[c]);
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int a = labels(x, y);
                if (a < 0) continue;
                if (x + 1 < w) {
                    const int b = labels(x + 1, y);
                    if (b >= 0 && b != a) {
                        seg[a].adjacent.insert(b);
                        seg[b].adjacent.insert(a);
                    }
                }
                if (y + 1 < h) {
                    const int b = labels(x, y + 1);
                    if (b >= 0 && b != a) {
                        seg[a].adjacent.insert(b);
                        seg[b].adjacent.insert(a);
                    }
                }
            }
        }

        std::vector<int> parent(static_cast<std::size_t>(count));
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int s) {
            while (parent[s] != s) {
                parent[s] = parent[parent[s]];
                s = parent[s];
            }
            return s;
        };

        bool changed = false;
        for (int s = 0; s < count; ++s) {
            if (find(s) != s || seg[s].size >= opt.min_segment) continue;
            int target = -1;
            double best = std::numeric_limits<double>::infinity();
            std::set<int> roots;
            for (int a : seg[s].adjacent) {
                const int r = find(a);
                if (r != s) roots.insert(r);
            }
            for (int r : roots) {
                const double d = lab_distance(seg[s].mean, seg[r].mean);
                if (d <= opt.merge_distance && d < best) {
                    best = d;
                    target = r;
                }
            }
            if (target < 0) continue;
            Segment& t = seg[target];
            Segment& src = seg[s];
            const double total = static_cast<double>(t.size + src.size);
            for (int c = 0; c < 3; ++c) {
                t.mean[c] += (static_cast<double>(src.size) / total) * (src.mean[c] - t.mean[c]);
            }
            t.size += src.size;
            for (int a : src.adjacent) t.adjacent.insert(a);
            parent[s] = target;
            changed = true;
        }
        ++passes;
        if (!changed) break;

        std::vector<int> compact(static_cast<std::size_t>(count), -1);
        int next = 0;
        for (int s = 0; s < count; ++s) {
            if (find(s) == s) compact[s] = next++;
        }
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] >= 0) labels[i] = compact[find(labels[i])];
        }
        count = next;
    }
    return passes;
}

// Gives every unlabelled pixel the label of the nearest labelled one (BFS order).
void fill_unlabelled(Grid<int>& labels) {
    const int w = labels.width();
    const int h = labels.height();
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) queue.push_back(i);
    }
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        const int x = static_cast<int>(i % static_cast<std::size_t>(w));
        const int y = static_cast<int>(i / static_cast<std::size_t>(w));
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
            if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
            const std::size_t j = labels.index(nx[k], ny[k]);
            if (labels[j] >= 0) continue;
            labels[j] = labels[i];
            queue.push_back(j);
        }
    }
}

} // namespace

PseudoAlbedo pseudo_albedo(const RgbGrid& img, const RegionMask& mask,
                           const PseudoAlbedoOptions& options) {
    require_same_shape(img, mask, "pseudo_albedo");
    if (!mask.any()) throw DataError("pseudo_albedo: mask is empty");
    if (options.work_width < 1 || options.work_height < 1) {
        throw ArgumentError("pseudo_albedo: working size must be positive");
    }
    if (!(options.l_scale > 0.0)) throw ArgumentError("pseudo_albedo: l_scale must be positive");

    const int w = img.width();
    const int h = img.height();
    const int lw = options.work_width;
    const int lh = options.work_height;

    // Mask-normalized downsizing so background colours do not bleed into the tread.
    RgbGrid lab(w, h, Rgb{});
    GrayGrid weight(w, h, 0.0);
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (!mask[i]) continue;
        Rgb v = srgb_to_lab(img[i]);
        v[0] *= options.l_scale;
        lab[i] = v;
        weight[i] = 1.0;
    }
    const RgbGrid low_sum = resize_bilinear(lab, lw, lh);
    const GrayGrid low_w = resize_bilinear(weight, lw, lh);
    double cut = 0.5;
    if (std::none_of(low_w.values().begin(), low_w.values().end(),
                     [](double v) { return v >= 0.5; })) {
        cut = std::numeric_limits<double>::min();
    }
    RgbGrid low(lw, lh, Rgb{});
    PointSet pts{3, {}};
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < low.size(); ++i) {
        if (!(low_w[i] >= cut)) continue;
        for (int c = 0; c < 3; ++c) low[i][c] = low_sum[i][c] / low_w[i];
        valid.push_back(i);
        pts.coords.insert(pts.coords.end(), low[i].begin(), low[i].end());
    }

    MeanShiftOptions ms_opt;
    ms_opt.threads = options.threads;
    const MeanShiftResult ms = mean_shift(pts, options.bandwidth, ms_opt);
    Grid<int> modes(lw, lh, -1);
    for (std::size_t j = 0; j < valid.size(); ++j) modes[valid[j]] = ms.assignment[j];
    int count = 0;
    Grid<int> labels = connected_components(modes, &count);

    PseudoAlbedo out;
    out.initial_segments = static_cast<std::size_t>(count);
    out.iterations = refine_segments(labels, count, low, options);
    fill_unlabelled(labels);

    const Grid<int> full = resize_nearest(labels, w, h);
    int n = 0;
    for (std::size_t i = 0; i < full.size(); ++i) n = std::max(n, full[i] + 1);
    std::vector<Rgb> mean(static_cast<std::size_t>(n), Rgb{});
    std::vector<std::size_t> size(static_cast<std::size_t>(n), 0);
    for (std::size_t i = 0; i < full.size(); ++i) {
        if (!mask[i]) continue;
        const auto s = static_cast<std::size_t>(full[i]);
        ++size[s];
        const double f = 1.0 / static_cast<double>(size[s]);
        for (int c = 0; c < 3; ++c) mean[s][c] += f * (img[i][c] - mean[s][c]);
    }
    std::vector<int> compact(static_cast<std::size_t>(n), -1);
    SegmentMap& seg = out.albedo.segments;
    for (int s = 0; s < n; ++s) {
        if (size[s] == 0) continue;
        compact[s] = static_cast<int>(seg.colors.size());
        seg.colors.push_back(mean[s]);
    }
    seg.labels = Grid<int>(w, h, -1);
    out.albedo.image = RgbGrid(w, h, Rgb{1.0, 1.0, 1.0});
    for (std::size_t i = 0; i < full.size(); ++i) {
        if (!mask[i]) continue;
        const int s = compact[static_cast<std::size_t>(full[i])];
        seg.labels[i] = s;
        out.albedo.image[i] = seg.colors[static_cast<std::size_t>(s)];
    }
    return out;
}

} // namespace treadkit
