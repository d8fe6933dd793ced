#include <treadkit/cli.hpp>

#include <treadkit/alignment.hpp>
#include <treadkit/appearance.hpp>
#include <treadkit/config.hpp>
#include <treadkit/errors.hpp>
#include <treadkit/imaging.hpp>
#include <treadkit/io.hpp>
#include <treadkit/metric.hpp>
#include <treadkit/parallel.hpp>
#include <treadkit/random.hpp>
#include <treadkit/renderer.hpp>
#include <treadkit/synth.hpp>
#include <treadkit/tta.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <ostream>

namespace treadkit {

namespace {

using json = nlohmann::ordered_json;

// Restores the process-wide thread default when a command returns.
class ThreadScope {
public:
    explicit ThreadScope(unsigned n) : saved_(default_threads()) {
        if (n > 0) set_default_threads(n);
    }
    ~ThreadScope() { set_default_threads(saved_); }
    ThreadScope(const ThreadScope&) = delete;
    ThreadScope& operator=(const ThreadScope&) = delete;

private:
    unsigned saved_;
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string two_digits(int v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", v);
    return buf;
}

// Runs fn(i) over the entries in parallel and collects per-entry error
// messages; reporting happens afterwards in entry order.
std::vector<std::string> for_entries(std::size_t n, const std::function<void(std::size_t)>& fn) {
    std::vector<std::string> errors(n);
    parallel_for(n, [&](std::size_t i) {
        try {
            fn(i);
        } catch (const ArgumentError& e) {
            errors[i] = e.what();
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    return errors;
}

RegionMask mask_or_full(const std::optional<fs::path>& path, int w, int h) {
    if (!path) return full_mask(w, h);
    RegionMask m = read_mask_png(*path);
    if (m.width() != w || m.height() != h) {
        throw DataError("mask " + path->string() + " is " + std::to_string(m.width()) + "x" +
                        std::to_string(m.height()) + ", expected " + std::to_string(w) + "x" +
                        std::to_string(h));
    }
    return m;
}

std::optional<fs::path> opt_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
}

/// Rubber-and-sole default when no palette is supplied.
Palette default_palette() {
    Palette p;
    p.entries.push_back({{0.16, 0.16, 0.17}, 0.6});
    p.entries.push_back({{0.55, 0.55, 0.58}, 0.3});
    p.entries.push_back({{0.80, 0.42, 0.20}, 0.1});
    return p;
}

struct Common {
    unsigned threads = 0;
    std::string config_path;
    std::uint64_t seed = 0;
};

ToolConfig load(const Common& c) {
    return c.config_path.empty() ? ToolConfig{} : load_config(c.config_path);
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
    std::string manifest, out, palette;
    int variants = 0;
    int lights = 0;
};

int cmd_synth(const Common& common, const SynthArgs& a, std::ostream& out, std::ostream& err) {
    ToolConfig cfg = load(common);
    const int n = a.variants > 0 ? a.variants : cfg.variants;
    const int lights = a.lights > 0 ? a.lights : cfg.lights_per_variant;
    if (n < 10 || n > 15) throw ArgumentError("--variants must lie in [10, 15]");
    if (lights > kLightCount) throw ArgumentError("--lights must be <= 17");
    const auto entries = read_manifest(a.manifest);
    if (entries.empty()) throw ArgumentError("no entries in " + a.manifest);
    const Palette palette = a.palette.empty() ? default_palette() : read_palette(a.palette);
    const fs::path out_dir = a.out;
    fs::create_directories(out_dir);
    const auto table = light_table(cfg.render);
    write_light_table(out_dir / "lights.json", table);

    std::vector<std::vector<ManifestEntry>> produced(entries.size());
    const bool outer = entries.size() > 1;
    const auto errors = for_entries(entries.size(), [&](std::size_t e) {
        const ManifestEntry& in = entries[e];
        const std::uint64_t entry_seed = Rng(common.seed, fnv1a(in.shoe_id)).bits();
        const RgbGrid print = read_png_rgb(in.image_path);
        const RegionMask mask = in.mask_path ? mask_or_full(in.mask_path, print.width(), print.height())
                                             : mask_from_print(print, cfg.synth);
        const auto variants =
            synth_variants(print, mask, n, entry_seed, cfg.synth, cfg.ranges, outer ? 1 : 0);
        const fs::path dir = out_dir / in.shoe_id;
        const fs::path mask_path = dir / "mask.png";
        write_mask_png(mask_path, mask);
        for (int v = 0; v < n; ++v) {
            const SynthVariant& sv = variants[static_cast<std::size_t>(v)];
            const std::string tag = "v" + two_digits(v);
            const fs::path depth_path = dir / ("depth_" + tag + ".pfm");
            const fs::path contact_path = dir / ("print_" + tag + ".png");
            const fs::path albedo_path = dir / ("albedo_" + tag + ".png");
            write_pfm(depth_path, sv.depth);
            write_print_png(contact_path, sv.contact);
            const AlbedoMap albedo =
                compose_albedo(sv.depth, mask, palette, Rng(entry_seed, 2000 + v).bits(), cfg.compose);
            write_png(albedo_path, albedo.image);

            // Distinct light configurations per variant.
            Rng pick(entry_seed, 1000 + static_cast<std::uint64_t>(v));
            std::vector<int> order(kLightCount);
            std::iota(order.begin(), order.end(), 0);
            for (int i = 0; i < lights; ++i) std::swap(order[i], order[pick.uniform_int(i, kLightCount - 1)]);
            for (int i = 0; i < lights; ++i) {
                const LightConfig& light = table[static_cast<std::size_t>(order[i])];
                RenderParams rp = cfg.render;
                rp.threads = outer ? 1 : 0;
                const fs::path image_path = dir / ("render_" + tag + "_l" + two_digits(light.index) + ".png");
                write_png(image_path, render(sv.depth, albedo, light, mask, rp));
                ManifestEntry m;
                m.shoe_id = in.shoe_id + "-" + tag + "-l" + two_digits(light.index);
                m.category = in.category;
                m.image_path = image_path;
                m.mask_path = mask_path;
                m.gt_print_path = contact_path;
                m.depth_path = depth_path;
                m.extra["source_id"] = in.shoe_id;
                m.extra["variant"] = v;
                m.extra["light_index"] = light.index;
                m.extra["albedo_path"] = fs::relative(albedo_path, out_dir).generic_string();
                const SynthDepthConfig& c = sv.config;
                m.extra["synth"] = {{"blur_sigma", c.blur_sigma},
                                    {"sigmoid_gain", c.sigmoid_gain},
                                    {"texture_amp", c.texture_amp},
                                    {"bevel_width", c.bevel_width},
                                    {"local_curv_amp", c.local_curv_amp},
                                    {"global_curv_amp", c.global_curv_amp},
                                    {"global_curv_width", c.global_curv_width}};
                produced[e].push_back(std::move(m));
            }
        }
    });

    std::vector<ManifestEntry> all;
    int failed = 0;
    for (std::size_t e = 0; e < entries.size(); ++e) {
        if (!errors[e].empty()) {
            err << "error: " << entries[e].shoe_id << ": " << errors[e] << '\n';
            ++failed;
            continue;
        }
        for (auto& m : produced[e]) all.push_back(std::move(m));
    }
    write_manifest(out_dir / "manifest.jsonl", all);
    out << "wrote " << all.size() << " renders for " << (entries.size() - failed) << " print(s) to "
        << (out_dir / "manifest.jsonl").string() << '\n';
    return failed > 0 ? kExitDataError : kExitOk;
}

// ---- eval / summarize ------------------------------------------------------

struct EvalArgs {
    std::string manifest, report, label;
    bool normalize = false;
    int window = 0;
};

int cmd_eval(const Common& common, const EvalArgs& a, std::ostream& out, std::ostream& err) {
    ToolConfig cfg = load(common);
    const int window = a.window > 0 ? a.window : cfg.window;
    if (window % 2 == 0) throw ArgumentError("--window must be odd");
    const auto entries = read_manifest(a.manifest);
    if (entries.empty()) throw ArgumentError("no entries in " + a.manifest);
    for (const auto& e : entries) {
        if (!e.category) throw DataError(e.shoe_id + ": entry has no category");
    }
    std::vector<ReportRow> rows(entries.size());
    const auto errors = for_entries(entries.size(), [&](std::size_t i) {
        const ManifestEntry& e = entries[i];
        rows[i].shoe_id = e.shoe_id;
        rows[i].category = *e.category;
        if (!e.depth_path) throw DataError("no depth_path");
        if (!e.gt_print_path) throw DataError("no gt_print_path");
        DepthGrid depth = read_pfm(*e.depth_path);
        const PrintMask gt = read_print_png(*e.gt_print_path);
        require_same_shape(depth, gt, "ground-truth print");
        const RegionMask mask = mask_or_full(e.mask_path, depth.width(), depth.height());
        if (a.normalize) depth = normalize_in_mask(depth, mask);
        const MatchResult r = best_match(depth, gt, mask, window);
        rows[i].iou = r.iou;
        rows[i].params = r.params;
    });
    int failed = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (errors[i].empty()) continue;
        rows[i].error = errors[i];
        rows[i].iou.reset();
        rows[i].params = {};
        err << "error: " << rows[i].shoe_id << ": " << errors[i] << '\n';
        ++failed;
    }
    write_report(a.report, rows);
    if (failed < static_cast<int>(rows.size())) out << format_summary_table(summarize_rows(rows), a.label);
    return failed > 0 ? kExitDataError : kExitOk;
}

bool same_summary(const EvalSummary& a, const EvalSummary& b) {
    if (a.count != b.count || a.mean_iou != b.mean_iou) return false;
    for (int c = 0; c < 3; ++c) {
        if (a.per_category[c].count != b.per_category[c].count) return false;
        if (a.per_category[c].mean_iou != b.per_category[c].mean_iou) return false;
    }
    return true;
}

int cmd_summarize(const std::string& report, const std::string& label, std::ostream& out,
                  std::ostream& err) {
    const Report rep = read_report(report);
    if (std::none_of(rep.rows.begin(), rep.rows.end(), [](const ReportRow& r) { return r.iou.has_value(); })) {
        throw DataError(report + ": no rows with an IoU");
    }
    const EvalSummary s = summarize_rows(rep.rows);
    out << format_summary_table(s, label);
    if (rep.summary && !same_summary(*rep.summary, s)) {
        err << "error: stored summary does not match the rows of " << report << '\n';
        return kExitDataError;
    }
    return kExitOk;
}

// ---- single-image commands -------------------------------------------------

int cmd_predict_print(const Common& common, const std::string& depth_path, const std::string& mask_path,
                      const std::string& out_path, int window_arg, std::ostream& out) {
    const ToolConfig cfg = load(common);
    const int window = window_arg > 0 ? window_arg : cfg.window;
    const DepthGrid depth = read_pfm(depth_path);
    const RegionMask mask = mask_or_full(opt_path(mask_path), depth.width(), depth.height());
    const PrintMask p = predict_print(depth, mask, window);
    write_print_png(out_path, p);
    out << "wrote " << out_path << " (" << p.count() << " print pixels)\n";
    return kExitOk;
}

int cmd_pseudo_albedo(const Common& common, const std::string& image_path, const std::string& mask_path,
                      const std::string& out_path, std::ostream& out) {
    const ToolConfig cfg = load(common);
    const RgbGrid img = read_png_rgb(image_path);
    const RegionMask mask = mask_or_full(opt_path(mask_path), img.width(), img.height());
    const PseudoAlbedo pa = pseudo_albedo(img, mask, cfg.pseudo);
    write_png(out_path, pa.albedo.image);
    out << "wrote " << out_path << " (" << pa.albedo.segments.segment_count() << " segments, "
        << pa.iterations << " refinement passes)\n";
    return kExitOk;
}

int cmd_palette(const Common& common, const std::string& image_path, const std::string& mask_path,
                const std::string& out_path, double bandwidth, std::ostream& out) {
    const ToolConfig cfg = load(common);
    const RgbGrid img = read_png_rgb(image_path);
    const RegionMask mask = mask_or_full(opt_path(mask_path), img.width(), img.height());
    const Palette p =
        extract_palette(img, mask, bandwidth > 0 ? bandwidth : cfg.palette_bandwidth, cfg.palette_max_points);
    write_palette(out_path, p);
    out << "wrote " << out_path << " (" << p.entries.size() << " colours)\n";
    return kExitOk;
}

struct AlignArgs {
    std::vector<std::string> prints, corrs;
    std::string reference, size, out;
    double lambda = -1.0;
    double threshold = -1.0;
};

int cmd_align(const Common& common, const AlignArgs& a, std::ostream& out) {
    const ToolConfig cfg = load(common);
    if (a.prints.empty()) throw ArgumentError("need at least one --print");
    if (a.prints.size() != a.corrs.size()) throw ArgumentError("need one --corr per --print");
    int w = 0, h = 0;
    if (!a.size.empty()) {
        if (std::sscanf(a.size.c_str(), "%dx%d", &w, &h) != 2 || w < 1 || h < 1) {
            throw ArgumentError("--size must look like 405x765");
        }
    } else if (!a.reference.empty()) {
        const RgbGrid ref = read_png_rgb(a.reference);
        w = ref.width();
        h = ref.height();
    } else {
        throw ArgumentError("need --size or --reference");
    }
    const double lambda = a.lambda >= 0 ? a.lambda : cfg.tps_lambda;
    const double theta = a.threshold >= 0 ? a.threshold : cfg.print_threshold;
    std::vector<GrayGrid> aligned;
    for (std::size_t i = 0; i < a.prints.size(); ++i) {
        const GrayGrid ink = read_print_ink(a.prints[i]);
        aligned.push_back(align_print(ink, read_correspondences(a.corrs[i]), lambda, w, h));
    }
    PrintMask result;
    if (aligned.size() == 1) {
        result = PrintMask(w, h);
        for (std::size_t i = 0; i < result.size(); ++i) result[i] = aligned[0][i] >= theta ? 1 : 0;
    } else {
        result = average_and_threshold(aligned, theta);
    }
    write_print_png(a.out, result);
    out << "wrote " << a.out << " from " << aligned.size() << " print(s)\n";
    return kExitOk;
}

int cmd_tta_expand(const std::string& image_path, const std::string& mask_path, const std::string& out_dir,
                   std::ostream& out) {
    const RgbGrid img = read_png_rgb(image_path);
    const RegionMask mask = mask_or_full(opt_path(mask_path), img.width(), img.height());
    const auto variants = make_variants(img, mask);
    const fs::path dir = out_dir;
    json doc;
    doc["width"] = img.width();
    doc["height"] = img.height();
    json list = json::array();
    for (const auto& v : variants) {
        const std::string name = v.spec.name();
        write_png(dir / (name + ".png"), v.image);
        write_mask_png(dir / (name + "_mask.png"), v.mask);
        list.push_back({{"spec", name},
                        {"image", name + ".png"},
                        {"mask", name + "_mask.png"},
                        {"depth", name + ".pfm"},
                        {"width", v.image.width()},
                        {"height", v.image.height()}});
    }
    doc["variants"] = list;
    write_text(dir / "tta.json", doc.dump(2) + "\n");
    out << "wrote " << variants.size() << " variants to " << dir.string() << '\n';
    return kExitOk;
}

int cmd_tta_merge(const std::string& manifest, const std::string& original_path, const std::string& depth_dir,
                  const std::string& mask_path, const std::string& out_path, std::ostream& out) {
    json doc;
    try {
        doc = json::parse(read_text(manifest));
    } catch (const json::exception& e) {
        throw DataError(manifest + ": " + e.what());
    }
    const fs::path dir = depth_dir.empty() ? fs::path(manifest).parent_path() : fs::path(depth_dir);
    const DepthGrid original = read_pfm(original_path);
    const RegionMask mask = mask_or_full(opt_path(mask_path), original.width(), original.height());
    std::vector<VariantDepth> variants;
    try {
        for (const auto& v : doc.at("variants")) {
            variants.push_back({read_pfm(dir / v.at("depth").get<std::string>()),
                                TransformSpec::parse(v.at("spec").get<std::string>())});
        }
    } catch (const json::exception& e) {
        throw DataError(manifest + ": " + e.what());
    }
    write_pfm(out_path, merge_predictions(original, variants, mask));
    out << "wrote " << out_path << " (merged " << variants.size() + 1 << " depth maps)\n";
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Shoe-tread depth, print and appearance toolkit", "treadkit"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--threads", common.threads, "Worker threads (default: all cores)");
    app.add_option("--config", common.config_path, "key = value config file")->check(CLI::ExistingFile);

    std::function<int()> action;

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Synthesize depth, albedo and renders from print images");
    s->add_option("--manifest", synth.manifest, "JSONL manifest of print PNGs")->required();
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--variants", synth.variants, "Depth maps per print (10-15)");
    s->add_option("--lights", synth.lights, "Light configurations rendered per depth map");
    s->add_option("--palette", synth.palette, "Palette JSON (default: built-in)");
    s->add_option("--seed", common.seed, "Random seed");
    s->callback([&] { action = [&] { return cmd_synth(common, synth, out, err); }; });

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Best-match IoU of predicted depth against ground-truth prints");
    e->add_option("--manifest", ev.manifest, "JSONL manifest with depth_path and gt_print_path")->required();
    e->add_option("--report", ev.report, "Report CSV to write")->required();
    e->add_flag("--normalize", ev.normalize, "Min-max normalize each depth map inside its mask first");
    e->add_option("--window", ev.window, "Local-mean window (odd, default 45)");
    e->add_option("--label", ev.label, "Row label of the printed table");
    e->callback([&] { action = [&] { return cmd_eval(common, ev, out, err); }; });

    std::string report, label;
    auto* sm = app.add_subcommand("summarize", "Print the table of a report CSV");
    sm->add_option("--report", report, "Report CSV")->required();
    sm->add_option("--label", label, "Row label");
    sm->callback([&] { action = [&] { return cmd_summarize(report, label, out, err); }; });

    std::string depth_path, mask_path, out_path, image_path;
    int window = 0;
    auto* pp = app.add_subcommand("predict-print", "Print from a depth map without ground truth");
    pp->add_option("--depth", depth_path, "Depth PFM")->required();
    pp->add_option("--mask", mask_path, "Tread mask PNG (default: whole image)");
    pp->add_option("--out", out_path, "Print PNG to write")->required();
    pp->add_option("--window", window, "Local-mean window (odd, default 45)");
    pp->callback([&] {
        action = [&] { return cmd_predict_print(common, depth_path, mask_path, out_path, window, out); };
    });

    auto* pa = app.add_subcommand("pseudo-albedo", "Piecewise-constant albedo estimate of a tread photo");
    pa->add_option("--image", image_path, "Tread image PNG")->required();
    pa->add_option("--mask", mask_path, "Tread mask PNG (default: whole image)");
    pa->add_option("--out", out_path, "Albedo PNG to write")->required();
    pa->callback([&] {
        action = [&] { return cmd_pseudo_albedo(common, image_path, mask_path, out_path, out); };
    });

    double bandwidth = 0.0;
    auto* pl = app.add_subcommand("palette", "Primary colours of a tread photo");
    pl->add_option("--image", image_path, "Tread image PNG")->required();
    pl->add_option("--mask", mask_path, "Tread mask PNG (default: whole image)");
    pl->add_option("--out", out_path, "Palette JSON to write")->required();
    pl->add_option("--bandwidth", bandwidth, "Mean-shift bandwidth in RGB units (default 0.08)");
    pl->callback([&] {
        action = [&] { return cmd_palette(common, image_path, mask_path, out_path, bandwidth, out); };
    });

    AlignArgs al;
    auto* ap = app.add_subcommand("align-prints", "Warp ink prints into the tread frame and threshold");
    ap->add_option("--print", al.prints, "Print PNG (repeatable)")->required();
    ap->add_option("--corr", al.corrs, "Correspondence CSV per print (repeatable)")->required();
    ap->add_option("--reference", al.reference, "Tread image fixing the output size");
    ap->add_option("--size", al.size, "Output size WxH");
    ap->add_option("--lambda", al.lambda, "TPS smoothness (default 0.5)");
    ap->add_option("--threshold", al.threshold, "Mean-ink threshold (default 0.5)");
    ap->add_option("--out", al.out, "Print PNG to write")->required();
    ap->callback([&] { action = [&] { return cmd_align(common, al, out); }; });

    std::string tta_dir, manifest, original, depth_dir;
    auto* tta = app.add_subcommand("tta", "Test-time augmentation");
    tta->require_subcommand(1);
    auto* tx = tta->add_subcommand("expand", "Write the 23 augmented variants and tta.json");
    tx->add_option("--image", image_path, "Tread image PNG")->required();
    tx->add_option("--mask", mask_path, "Tread mask PNG");
    tx->add_option("--out", tta_dir, "Output directory")->required();
    tx->callback([&] { action = [&] { return cmd_tta_expand(image_path, mask_path, tta_dir, out); }; });
    auto* tm = tta->add_subcommand("merge", "Average the original and 23 variant depth maps");
    tm->add_option("--manifest", manifest, "tta.json written by expand")->required();
    tm->add_option("--original", original, "Depth PFM of the unmodified image")->required();
    tm->add_option("--depth-dir", depth_dir, "Directory of <variant>.pfm files (default: manifest dir)");
    tm->add_option("--mask", mask_path, "Tread mask PNG");
    tm->add_option("--out", out_path, "Merged depth PFM")->required();
    tm->callback([&] {
        action = [&] { return cmd_tta_merge(manifest, original, depth_dir, mask_path, out_path, out); };
    });

    auto* li = app.add_subcommand("lights", "Write the light configuration table");
    li->add_option("--out", out_path, "JSON file")->required();
    li->callback([&] {
        action = [&] {
            write_light_table(out_path, light_table(load(common).render));
            out << "wrote " << out_path << " (" << kLightCount << " configurations)\n";
            return static_cast<int>(kExitOk);
        };
    });

    auto* cf = app.add_subcommand("config", "Print every config key with its value");
    cf->callback([&] {
        action = [&] {
            out << format_config(load(common));
            return static_cast<int>(kExitOk);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& pe) {
        const int code = app.exit(pe, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        ThreadScope scope(common.threads);
        return action ? action() : kExitUsage;
    } catch (const ArgumentError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitDataError;
    }
}

} // namespace treadkit
