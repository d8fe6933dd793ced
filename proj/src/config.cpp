#include <treadkit/config.hpp>

#include <treadkit/errors.hpp>
#include <treadkit/io.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

namespace treadkit {

namespace {

struct Field {
    std::string section;
    std::string key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
};

double to_number(const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(d)) throw ArgumentError("expected a number, got '" + v + "'");
    return d;
}

// Shortest of %.15g / %.17g that reads back to the same value.
std::string show(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Field real(const char* section, const char* key, double& ref) {
    return {section, key, [&ref](const std::string& v) { ref = to_number(v); },
            [&ref] { return show(ref); }};
}

template <typename Int>
Field integer(const char* section, const char* key, Int& ref) {
    return {section, key,
            [&ref](const std::string& v) {
                const double d = to_number(v);
                if (d != std::floor(d)) throw ArgumentError("expected an integer, got '" + v + "'");
                if (std::is_unsigned_v<Int> && d < 0) throw ArgumentError("expected a non-negative integer");
                ref = static_cast<Int>(d);
            },
            [&ref] { return std::to_string(ref); }};
}

Field optional_real(const char* section, const char* key, std::optional<double>& ref) {
    return {section, key,
            [&ref](const std::string& v) {
                if (v == "auto") {
                    ref.reset();
                } else {
                    ref = to_number(v);
                }
            },
            [&ref] { return ref ? show(*ref) : std::string("auto"); }};
}

std::vector<Field> fields(ToolConfig& c) {
    SynthDepthConfig& s = c.synth;
    SynthRanges& r = c.ranges;
    PseudoAlbedoOptions& p = c.pseudo;
    RenderParams& g = c.render;
    return {
        real("synth", "hue_min_deg", s.hue_min_deg),
        real("synth", "hue_max_deg", s.hue_max_deg),
        real("synth", "min_saturation", s.min_saturation),
        real("synth", "min_value", s.min_value),
        real("synth", "hull_radius", s.hull_radius),
        real("synth", "blur_sigma", s.blur_sigma),
        real("synth", "sigmoid_gain", s.sigmoid_gain),
        real("synth", "sigmoid_center", s.sigmoid_center),
        real("synth", "texture_amp", s.texture_amp),
        integer("synth", "bevel_width", s.bevel_width),
        real("synth", "depth_scale", s.depth_scale),
        real("synth", "local_curv_amp", s.local_curv_amp),
        real("synth", "local_curv_sigma", s.local_curv_sigma),
        real("synth", "global_curv_amp", s.global_curv_amp),
        real("synth", "global_curv_width", s.global_curv_width),
        integer("synth", "variants", c.variants),
        integer("synth", "lights_per_variant", c.lights_per_variant),

        real("ranges", "blur_sigma_min", r.blur_sigma_min),
        real("ranges", "blur_sigma_max", r.blur_sigma_max),
        real("ranges", "sigmoid_gain_min", r.sigmoid_gain_min),
        real("ranges", "sigmoid_gain_max", r.sigmoid_gain_max),
        real("ranges", "texture_amp_min", r.texture_amp_min),
        real("ranges", "texture_amp_max", r.texture_amp_max),
        real("ranges", "bevel_probability", r.bevel_probability),
        integer("ranges", "bevel_min", r.bevel_min),
        integer("ranges", "bevel_max", r.bevel_max),
        real("ranges", "local_curv_amp_min", r.local_curv_amp_min),
        real("ranges", "local_curv_amp_max", r.local_curv_amp_max),
        real("ranges", "global_curv_amp_min", r.global_curv_amp_min),
        real("ranges", "global_curv_amp_max", r.global_curv_amp_max),
        real("ranges", "global_curv_width_min", r.global_curv_width_min),
        real("ranges", "global_curv_width_max", r.global_curv_width_max),

        real("appearance", "palette_bandwidth", c.palette_bandwidth),
        integer("appearance", "palette_max_points", c.palette_max_points),
        optional_real("appearance", "contact_threshold", c.compose.contact_threshold),
        real("appearance", "watershed_sigma", c.compose.watershed_sigma),
        real("appearance", "l_scale", p.l_scale),
        integer("appearance", "work_width", p.work_width),
        integer("appearance", "work_height", p.work_height),
        real("appearance", "bandwidth", p.bandwidth),
        integer("appearance", "min_segment", p.min_segment),
        real("appearance", "merge_distance", p.merge_distance),
        integer("appearance", "max_iterations", p.max_iterations),

        real("renderer", "ambient", g.ambient),
        real("renderer", "bulb_weight", g.bulb_weight),
        real("renderer", "ao_strength", g.ao_strength),
        real("renderer", "ao_depth", g.ao_depth),
        real("renderer", "bulb_elevation", g.bulb_elevation),
        real("renderer", "z_scale", g.z_scale),
        integer("renderer", "ao_window", g.ao_window),

        integer("eval", "window", c.window),
        real("align", "lambda", c.tps_lambda),
        real("align", "threshold", c.print_threshold),
    };
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

ToolConfig parse_config(const std::string& text, const std::string& source) {
    ToolConfig cfg;
    std::vector<Field> table = fields(cfg);
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ArgumentError(where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ArgumentError(where + "expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        std::string sec = section;
        if (const auto dot = key.find('.'); dot != std::string::npos) {
            sec = key.substr(0, dot);
            key = key.substr(dot + 1);
        }
        auto it = std::find_if(table.begin(), table.end(),
                               [&](const Field& f) { return f.section == sec && f.key == key; });
        if (it == table.end()) {
            throw ArgumentError(where + "unknown key '" + (sec.empty() ? key : sec + "." + key) + "'");
        }
        try {
            it->set(value);
        } catch (const ArgumentError& e) {
            throw ArgumentError(where + key + ": " + e.what());
        }
    }
    try {
        cfg.synth.validate();
        cfg.render.validate();
    } catch (const ArgumentError& e) {
        throw ArgumentError(source + ": " + e.what());
    }
    if (cfg.variants < 10 || cfg.variants > 15) throw ArgumentError(source + ": variants must lie in [10, 15]");
    if (cfg.lights_per_variant < 1) throw ArgumentError(source + ": lights_per_variant must be >= 1");
    return cfg;
}

ToolConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const DataError& e) {
        throw ArgumentError(e.what());
    }
    return parse_config(text, path.string());
}

std::string format_config(const ToolConfig& cfg) {
    ToolConfig copy = cfg;
    std::ostringstream os;
    std::string section;
    for (const Field& f : fields(copy)) {
        if (f.section != section) {
            if (!section.empty()) os << '\n';
            section = f.section;
            os << '[' << section << "]\n";
        }
        os << f.key << " = " << f.get() << '\n';
    }
    return os.str();
}

} // namespace treadkit
