#include <treadkit/metric.hpp>

#include <treadkit/imaging.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace treadkit {

namespace {

double ratio(std::size_t inter, std::size_t uni) {
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void check_inputs(const DepthGrid& depth, const RegionMask& mask, const char* what) {
    require_same_shape(depth, mask, what);
    if (!mask.any()) throw DomainError(std::string(what) + ": mask is empty");
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (mask[i] && !std::isfinite(depth[i])) {
            throw DataError(std::string(what) + ": non-finite depth inside mask at pixel " +
                            std::to_string(i));
        }
    }
}

struct Sample {
    double depth;
    bool gt;
};

} // namespace

double iou(const PrintMask& a, const PrintMask& b, const RegionMask& mask) {
    require_same_shape(a, b, "iou");
    require_same_shape(a, mask, "iou");
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!mask[i]) continue;
        const bool pa = a[i] != 0;
        const bool pb = b[i] != 0;
        inter += (pa && pb) ? 1 : 0;
        uni += (pa || pb) ? 1 : 0;
    }
    return ratio(inter, uni);
}

SweepGrid SweepGrid::inclusive(double start, double stop, double step) {
    if (!(step > 0.0)) throw ArgumentError("SweepGrid: step must be positive");
    SweepGrid g{start, step, 0};
    if (stop < start) return g;
    g.count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    return g;
}

SweepGrid scale_sweep() { return {0.10, 0.01, 191}; }

SweepGrid non_contact_sweep(double p95) { return SweepGrid::inclusive(0.1 * p95, p95, 0.01); }

SweepGrid contact_sweep(double p05) {
    if (!(p05 > 0.0)) return {p05, 0.1, 0};
    return SweepGrid::inclusive(p05, 30.0 * p05, 0.1);
}

MatchResult best_match(const DepthGrid& depth, const PrintMask& gt, const RegionMask& mask,
                       int window) {
    require_same_shape(depth, gt, "best_match");
    check_inputs(depth, mask, "best_match");

    const GrayGrid local = local_mean_depth(depth, mask, window);

    // Masked pixels only, packed for the sweeps.
    std::vector<std::size_t> idx;
    idx.reserve(mask.count());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) idx.push_back(i);
    }
    const std::size_t n = idx.size();
    std::vector<double> d(n), dl(n);
    std::vector<std::uint8_t> g(n);
    std::size_t gt_count = 0;
    for (std::size_t j = 0; j < n; ++j) {
        d[j] = depth[idx[j]];
        dl[j] = local[idx[j]];
        g[j] = gt[idx[j]] ? 1 : 0;
        gt_count += g[j];
    }

    MatchResult result;
    double best = 0.0;

    // Stage 1: adaptive threshold against s * d_l.
    const SweepGrid s_grid = scale_sweep();
    std::optional<std::size_t> best_s;
    for (std::size_t k = 0; k < s_grid.count; ++k) {
        const double s = s_grid.value(k);
        std::size_t pred = 0;
        std::size_t inter = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (d[j] < s * dl[j]) {
                ++pred;
                inter += g[j];
            }
        }
        const double v = ratio(inter, pred + gt_count - inter);
        if (v > best) {
            best = v;
            best_s = k;
        }
    }
    std::vector<std::uint8_t> current(n, 0);
    if (best_s) {
        const double s = s_grid.value(*best_s);
        result.params.s = s;
        for (std::size_t j = 0; j < n; ++j) current[j] = d[j] < s * dl[j] ? 1 : 0;
    }

    // Stage 2: clip non-contact regions, current AND (depth < t_nc).
    {
        std::vector<Sample> inside;
        for (std::size_t j = 0; j < n; ++j) {
            if (current[j]) inside.push_back({d[j], g[j] != 0});
        }
        std::sort(inside.begin(), inside.end(),
                  [](const Sample& a, const Sample& b) { return a.depth < b.depth; });

        const SweepGrid grid = non_contact_sweep(percentile(depth, mask, 95.0));
        std::size_t below = 0;  // samples with depth < t
        std::size_t below_gt = 0;
        std::optional<double> best_t;
        for (std::size_t k = 0; k < grid.count; ++k) {
            const double t = grid.value(k);
            while (below < inside.size() && inside[below].depth < t) {
                below_gt += inside[below].gt ? 1 : 0;
                ++below;
            }
            const double v = ratio(below_gt, below + gt_count - below_gt);
            // The print shrinks to current AND (depth < t) on improvement; later,
            // larger thresholds reproduce it exactly and cannot improve again.
            if (v > best) {
                best = v;
                best_t = t;
                break;
            }
        }
        if (best_t) {
            result.params.t_nc = best_t;
            for (std::size_t j = 0; j < n; ++j) {
                if (current[j] && !(d[j] < *best_t)) current[j] = 0;
            }
        }
    }

    // Stage 3: fill contact regions, current OR (depth < t_c).
    {
        std::size_t base = 0;
        std::size_t base_gt = 0;
        std::vector<Sample> outside;
        for (std::size_t j = 0; j < n; ++j) {
            if (current[j]) {
                ++base;
                base_gt += g[j];
            } else {
                outside.push_back({d[j], g[j] != 0});
            }
        }
        std::sort(outside.begin(), outside.end(),
                  [](const Sample& a, const Sample& b) { return a.depth < b.depth; });

        const SweepGrid grid = contact_sweep(percentile(depth, mask, 5.0));
        std::size_t below = 0;
        std::size_t below_gt = 0;
        std::optional<double> best_t;
        for (std::size_t k = 0; k < grid.count; ++k) {
            const double t = grid.value(k);
            while (below < outside.size() && outside[below].depth < t) {
                below_gt += outside[below].gt ? 1 : 0;
                ++below;
            }
            const std::size_t inter = base_gt + below_gt;
            const double v = ratio(inter, base + below + gt_count - inter);
            if (v > best) {
                best = v;
                best_t = t;
            }
        }
        if (best_t) {
            result.params.t_c = best_t;
            for (std::size_t j = 0; j < n; ++j) {
                if (d[j] < *best_t) current[j] = 1;
            }
        }
    }

    result.iou = best;
    result.print = PrintMask(depth.width(), depth.height());
    for (std::size_t j = 0; j < n; ++j) result.print[idx[j]] = current[j];

    // With nothing ever beating 0, the returned print is empty; an empty ground
    // truth then matches it perfectly.
    if (!best_s && !result.params.t_nc && !result.params.t_c) {
        result.iou = iou(result.print, gt, mask);
    }
    return result;
}

PrintMask predict_print(const DepthGrid& depth, const RegionMask& mask, int window) {
    check_inputs(depth, mask, "predict_print");
    const GrayGrid local = local_mean_depth(depth, mask, window);
    const double p97 = percentile(depth, mask, 97.0);
    const double p03 = percentile(depth, mask, 3.0);
    PrintMask out(depth.width(), depth.height());
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (!mask[i]) continue;
        const double v = depth[i];
        out[i] = ((v < 1.0 * local[i] && v < p97) || v < p03) ? 1 : 0;
    }
    return out;
}

std::string to_string(Category c) {
    switch (c) {
    case Category::NewAthletic: return "new-athletic";
    case Category::Formal: return "formal";
    case Category::Used: return "used";
    }
    return "unknown";
}

Category parse_category(const std::string& s) {
    for (Category c : kCategories) {
        if (to_string(c) == s) return c;
    }
    throw ArgumentError("unknown shoe category '" + s + "' (expected new-athletic, formal or used)");
}

EvalSummary aggregate(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw ArgumentError("aggregate: no records");
    EvalSummary out;
    std::array<double, 3> sums{};
    double total = 0.0;
    for (const auto& r : records) {
        const int c = static_cast<int>(r.category);
        sums[c] += r.iou;
        out.per_category[c].count += 1;
        total += r.iou;
    }
    for (int c = 0; c < 3; ++c) {
        if (out.per_category[c].count > 0) {
            out.per_category[c].mean_iou = sums[c] / static_cast<double>(out.per_category[c].count);
        }
    }
    out.count = records.size();
    out.mean_iou = total / static_cast<double>(records.size());
    return out;
}

std::string format_summary_table(const EvalSummary& summary, const std::string& label) {
    auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
        return std::string(buf);
    };
    const std::string name = label.empty() ? "Method" : label;
    const int w0 = static_cast<int>(std::max<std::size_t>(name.size(), 6));
    char line[512];
    std::ostringstream os;
    std::snprintf(line, sizeof line, "%-*s  %14s  %10s  %10s  %6s\n", w0, "", "New-Athletic",
                  "Formal", "Used", "mIoU");
    os << line;
    std::snprintf(line, sizeof line, "%-*s  %14s  %10s  %10s  %6s\n", w0, "", "(seen)",
                  "(unseen)", "(unseen)", "");
    os << line;
    std::snprintf(line, sizeof line, "%-*s  %14s  %10s  %10s  %6s\n", w0, name.c_str(),
                  cell(summary.of(Category::NewAthletic).mean_iou).c_str(),
                  cell(summary.of(Category::Formal).mean_iou).c_str(),
                  cell(summary.of(Category::Used).mean_iou).c_str(),
                  cell(summary.mean_iou).c_str());
    os << line;
    return os.str();
}

} // namespace treadkit
