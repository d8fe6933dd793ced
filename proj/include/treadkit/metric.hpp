#pragma once

#include <treadkit/grid.hpp>

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace treadkit {

/// Intersection over union of two prints, counted only inside `mask`.
/// Two prints that are both empty inside the mask score 1.0.
double iou(const PrintMask& a, const PrintMask& b, const RegionMask& mask);

/// An inclusive, evenly spaced threshold grid: value(k) = start + step * k.
/// Values are indexed rather than accumulated so no drift builds up.
struct SweepGrid {
    double start = 0.0;
    double step = 0.0;
    std::size_t count = 0;

    double value(std::size_t k) const { return start + step * static_cast<double>(k); }

    /// Samples start, start + step, ... up to and including `stop`
    /// (1e-9 step slack). Empty when stop < start.
    static SweepGrid inclusive(double start, double stop, double step);
};

/// Adaptive-threshold multipliers s = 0.10, 0.11, ..., 2.00 (191 samples).
SweepGrid scale_sweep();
/// Non-contact clipping thresholds 0.1*p95 ... p95 in steps of 0.01.
SweepGrid non_contact_sweep(double p95);
/// Contact thresholds p05 ... 30*p05 in steps of 0.1; empty when p05 <= 0.
SweepGrid contact_sweep(double p05);

/// Winning sweep values; a stage that never improved the IoU leaves its value unset.
struct MatchParams {
    std::optional<double> s;
    std::optional<double> t_nc;
    std::optional<double> t_c;
};

struct MatchResult {
    double iou = 0.0;
    PrintMask print;
    MatchParams params;
};

/// Best-match IoU between a predicted depth map and a ground-truth print.
///
/// Stage 1 thresholds depth against s * d_l, where d_l is the mask-normalized
/// local mean (window x window box), keeping the s with the highest IoU.
/// Stage 2 clips that print with depth < t_nc for t_nc in non_contact_sweep(p95).
/// Stage 3 unions the result with depth < t_c for t_c in contact_sweep(p05).
/// A candidate is kept only on strict improvement, so ties resolve to the
/// earliest parameter. An improving Stage 2 candidate replaces the running
/// print, so every later (larger) t_nc reproduces it and the first improving
/// threshold wins. Stage 3 scores every t_c against the Stage 2 print.
///
/// Throws ArgumentError on shape mismatch or a bad window, DomainError on an
/// empty mask and DataError on non-finite depth inside the mask.
MatchResult best_match(const DepthGrid& depth, const PrintMask& gt, const RegionMask& mask,
                       int window = 45);

/// Print prediction without ground truth: s = 1, t_nc = p97, t_c = p03.
/// ((depth < d_l) and (depth < p97)) or (depth < p03), inside the mask.
PrintMask predict_print(const DepthGrid& depth, const RegionMask& mask, int window = 45);

enum class Category { NewAthletic, Formal, Used };

inline constexpr std::array<Category, 3> kCategories = {Category::NewAthletic, Category::Formal,
                                                        Category::Used};

std::string to_string(Category c);
/// Accepts "new-athletic", "formal", "used". Throws ArgumentError otherwise.
Category parse_category(const std::string& s);

struct EvalRecord {
    std::string shoe_id;
    Category category = Category::NewAthletic;
    double iou = 0.0;
    MatchParams params;
};

struct CategoryStat {
    std::size_t count = 0;
    std::optional<double> mean_iou;
};

struct EvalSummary {
    std::array<CategoryStat, 3> per_category;  // indexed like kCategories
    std::size_t count = 0;
    double mean_iou = 0.0;  // mean over all records, not over category means

    const CategoryStat& of(Category c) const { return per_category[static_cast<int>(c)]; }
};

/// Per-category and overall mean IoU. Throws ArgumentError on an empty list.
EvalSummary aggregate(const std::vector<EvalRecord>& records);

/// Table-style rendering (percent, one decimal): seen/unseen columns and mIoU.
std::string format_summary_table(const EvalSummary& summary, const std::string& label = "");

} // namespace treadkit
