#include <treadkit/io.hpp>

#include <treadkit/errors.hpp>

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace treadkit {

using json = nlohmann::ordered_json;

namespace {

std::uint8_t to_byte(double v) {
    if (!(v >= 0.0)) return 0;  // also catches NaN
    if (v >= 1.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(what + ": not a number: '" + s + "'");
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::ofstream open_out(const fs::path& path, bool binary) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
}

struct PngPixels {
    int width = 0;
    int height = 0;
    std::vector<png_byte> data;
};

PngPixels read_png(const fs::path& path, png_uint_32 format) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw DataError("cannot read PNG " + path.string() + ": " + image.message);
    }
    image.format = format;
    PngPixels px;
    px.width = static_cast<int>(image.width);
    px.height = static_cast<int>(image.height);
    px.data.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, px.data.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DataError("cannot decode PNG " + path.string() + ": " + msg);
    }
    return px;
}

void write_png_bytes(const fs::path& path, int width, int height, png_uint_32 format,
                     const std::vector<png_byte>& data) {
    ensure_parent(path);
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    if (!png_image_write_to_file(&image, path.c_str(), 0, data.data(), 0, nullptr)) {
        throw DataError("cannot write PNG " + path.string() + ": " + image.message);
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? q : (base / q).lexically_normal();
}

std::string relative_to(const fs::path& base, const fs::path& p) {
    if (p.is_relative()) return p.generic_string();
    const fs::path abs_base = fs::absolute(base).lexically_normal();
    const fs::path rel = p.lexically_normal().lexically_relative(abs_base);
    if (rel.empty() || *rel.begin() == "..") return p.generic_string();
    return rel.generic_string();
}

} // namespace

void write_pfm(const fs::path& path, const GrayGrid& img) {
    std::ofstream out = open_out(path, true);
    out << "Pf\n" << img.width() << ' ' << img.height() << "\n-1.0\n";
    std::vector<char> row(static_cast<std::size_t>(img.width()) * 4);
    for (int y = img.height() - 1; y >= 0; --y) {
        for (int x = 0; x < img.width(); ++x) {
            auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(img(x, y)));
            for (int b = 0; b < 4; ++b) row[4 * x + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw DataError("cannot write " + path.string());
}

GrayGrid read_pfm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string magic;
    long long w = 0, h = 0;
    double scale = 0.0;
    in >> magic >> w >> h >> scale;
    if (!in || in.get() == EOF) throw DataError(path.string() + ": truncated PFM header");
    if (magic != "Pf") {
        throw DataError(path.string() + ": expected a single-channel PFM (Pf), got '" + magic + "'");
    }
    if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16) || scale == 0.0) {
        throw DataError(path.string() + ": invalid PFM header");
    }
    const bool little = scale < 0.0;
    GrayGrid img(static_cast<int>(w), static_cast<int>(h));
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 4);
    for (long long y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw DataError(path.string() + ": truncated PFM data");
        for (long long x = 0; x < w; ++x) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) {
                const std::uint32_t byte = row[4 * x + b];
                bits |= little ? byte << (8 * b) : byte << (8 * (3 - b));
            }
            img(static_cast<int>(x), static_cast<int>(y)) = std::bit_cast<float>(bits);
        }
    }
    return img;
}

void write_png(const fs::path& path, const RgbGrid& img) {
    std::vector<png_byte> data(img.size() * 3);
    for (std::size_t i = 0; i < img.size(); ++i) {
        for (int c = 0; c < 3; ++c) data[3 * i + c] = to_byte(img[i][c]);
    }
    write_png_bytes(path, img.width(), img.height(), PNG_FORMAT_RGB, data);
}

void write_png(const fs::path& path, const GrayGrid& img) {
    std::vector<png_byte> data(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) data[i] = to_byte(img[i]);
    write_png_bytes(path, img.width(), img.height(), PNG_FORMAT_GRAY, data);
}

RgbGrid read_png_rgb(const fs::path& path) {
    // Transparent pixels are composited onto white (paper / background).
    const PngPixels px = read_png(path, PNG_FORMAT_RGBA);
    RgbGrid img(px.width, px.height);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double a = px.data[4 * i + 3] / 255.0;
        for (int c = 0; c < 3; ++c) {
            const double v = px.data[4 * i + c] / 255.0;
            img[i][c] = a == 1.0 ? v : v * a + (1.0 - a);
        }
    }
    return img;
}

GrayGrid read_png_gray(const fs::path& path) {
    const PngPixels px = read_png(path, PNG_FORMAT_GA);
    GrayGrid img(px.width, px.height);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double a = px.data[2 * i + 1] / 255.0;
        const double v = px.data[2 * i] / 255.0;
        img[i] = a == 1.0 ? v : v * a + (1.0 - a);
    }
    return img;
}

void write_mask_png(const fs::path& path, const RegionMask& mask) {
    std::vector<png_byte> data(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) data[i] = mask[i] ? 255 : 0;
    write_png_bytes(path, mask.width(), mask.height(), PNG_FORMAT_GRAY, data);
}

RegionMask read_mask_png(const fs::path& path) {
    const PngPixels px = read_png(path, PNG_FORMAT_GRAY);
    RegionMask mask(px.width, px.height);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = px.data[i] >= 128 ? 1 : 0;
    return mask;
}

void write_print_png(const fs::path& path, const PrintMask& print) {
    std::vector<png_byte> data(print.size());
    for (std::size_t i = 0; i < print.size(); ++i) data[i] = print[i] ? 0 : 255;
    write_png_bytes(path, print.width(), print.height(), PNG_FORMAT_GRAY, data);
}

GrayGrid read_print_ink(const fs::path& path) {
    GrayGrid g = read_png_gray(path);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 1.0 - g[i];
    return g;
}

PrintMask read_print_png(const fs::path& path) {
    const GrayGrid ink = read_print_ink(path);
    PrintMask p(ink.width(), ink.height());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = ink[i] >= 0.5 ? 1 : 0;
    return p;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch == '\n' || ch == '\r' ? ' ' : ch;
    }
    return out + "\"";
}

Correspondences read_correspondences(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    Correspondences out;
    int line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line)[0] == '#') continue;
        const auto f = split_csv_line(line);
        if (!header) {
            header = true;
            if (f.size() == 4 && trim(f[0]) == "src_x") continue;
            throw DataError(path.string() + ": expected header src_x,src_y,dst_x,dst_y");
        }
        if (f.size() != 4) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
        }
        const std::string where = path.string() + ":" + std::to_string(line_no);
        out.push_back({{parse_double(trim(f[0]), where), parse_double(trim(f[1]), where)},
                       {parse_double(trim(f[2]), where), parse_double(trim(f[3]), where)}});
    }
    return out;
}

void write_correspondences(const fs::path& path, const Correspondences& c) {
    std::ofstream out = open_out(path, false);
    out << "src_x,src_y,dst_x,dst_y\n";
    for (const auto& p : c) {
        out << format_double(p.src.x) << ',' << format_double(p.src.y) << ','
            << format_double(p.dst.x) << ',' << format_double(p.dst.y) << '\n';
    }
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    const fs::path base = path.parent_path();
    std::vector<ManifestEntry> out;
    std::set<std::string> ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        if (!j.is_object()) throw DataError(where + ": expected a JSON object");
        ManifestEntry e;
        auto take_string = [&](const char* key, bool required) -> std::optional<std::string> {
            auto it = j.find(key);
            if (it == j.end() || it->is_null()) {
                if (required) throw DataError(where + ": missing '" + key + "'");
                return std::nullopt;
            }
            if (!it->is_string()) throw DataError(where + ": '" + key + "' must be a string");
            std::string v = it->get<std::string>();
            j.erase(it);
            return v;
        };
        e.shoe_id = *take_string("shoe_id", true);
        if (auto c = take_string("category", false)) {
            try {
                e.category = parse_category(*c);
            } catch (const ArgumentError& err) {
                throw DataError(where + ": " + err.what());
            }
        }
        e.image_path = resolve(base, *take_string("image_path", true));
        if (auto p = take_string("mask_path", false)) e.mask_path = resolve(base, *p);
        if (auto p = take_string("gt_print_path", false)) e.gt_print_path = resolve(base, *p);
        if (auto p = take_string("depth_path", false)) e.depth_path = resolve(base, *p);
        e.extra = std::move(j);

        if (!ids.insert(e.shoe_id).second) throw DataError(where + ": duplicate shoe_id '" + e.shoe_id + "'");
        for (const fs::path* p : {&e.image_path, e.mask_path ? &*e.mask_path : nullptr,
                                  e.gt_print_path ? &*e.gt_print_path : nullptr,
                                  e.depth_path ? &*e.depth_path : nullptr}) {
            if (p && !fs::exists(*p)) {
                throw DataError(where + ": referenced file does not exist: " + p->string());
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
    const fs::path base = path.parent_path();
    std::ostringstream os;
    for (const auto& e : entries) {
        json j;
        j["shoe_id"] = e.shoe_id;
        if (e.category) j["category"] = to_string(*e.category);
        j["image_path"] = relative_to(base, e.image_path);
        if (e.mask_path) j["mask_path"] = relative_to(base, *e.mask_path);
        if (e.gt_print_path) j["gt_print_path"] = relative_to(base, *e.gt_print_path);
        if (e.depth_path) j["depth_path"] = relative_to(base, *e.depth_path);
        for (const auto& [k, v] : e.extra.items()) j[k] = v;
        os << j.dump() << '\n';
    }
    write_text(path, os.str());
}

void write_palette(const fs::path& path, const Palette& palette) {
    json arr = json::array();
    for (const auto& e : palette.entries) {
        arr.push_back({{"rgb", {e.color[0], e.color[1], e.color[2]}}, {"proportion", e.proportion}});
    }
    write_text(path, arr.dump(2) + "\n");
}

Palette read_palette(const fs::path& path) {
    Palette p;
    try {
        const json arr = json::parse(read_text(path));
        for (const auto& e : arr) {
            PaletteEntry pe;
            const auto& rgb = e.at("rgb");
            if (!rgb.is_array() || rgb.size() != 3) throw DataError("rgb must hold 3 numbers");
            for (int c = 0; c < 3; ++c) pe.color[c] = rgb[c].get<double>();
            pe.proportion = e.at("proportion").get<double>();
            p.entries.push_back(pe);
        }
        p.validate();
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const ArgumentError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return p;
}

void write_light_table(const fs::path& path, const std::vector<LightConfig>& lights) {
    json arr = json::array();
    for (const auto& l : lights) {
        json bulbs = json::array();
        for (const auto& b : l.bulbs) {
            bulbs.push_back({{"azimuth_deg", b.azimuth_deg}, {"elevation_deg", b.elevation_deg}});
        }
        arr.push_back({{"index", l.index},
                       {"ambient", l.ambient},
                       {"bulb_weight", l.bulb_weight},
                       {"bulbs", bulbs}});
    }
    write_text(path, arr.dump(2) + "\n");
}

std::vector<LightConfig> read_light_table(const fs::path& path) {
    std::vector<LightConfig> out;
    try {
        const json arr = json::parse(read_text(path));
        for (const auto& j : arr) {
            LightConfig l;
            l.index = j.at("index").get<int>();
            l.ambient = j.at("ambient").get<double>();
            l.bulb_weight = j.at("bulb_weight").get<double>();
            for (const auto& b : j.at("bulbs")) {
                l.bulbs.push_back({b.at("azimuth_deg").get<double>(), b.at("elevation_deg").get<double>()});
            }
            out.push_back(std::move(l));
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return out;
}

EvalSummary summarize_rows(const std::vector<ReportRow>& rows) {
    std::vector<EvalRecord> records;
    for (const auto& r : rows) {
        if (r.iou) records.push_back({r.shoe_id, r.category, *r.iou, r.params});
    }
    return aggregate(records);
}

void write_report(const fs::path& path, const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "shoe_id,category,iou,s,t_nc,t_c,error\n";
    for (const auto& r : rows) {
        os << csv_field(r.shoe_id) << ',' << to_string(r.category) << ',' << format_optional(r.iou)
           << ',' << format_optional(r.params.s) << ',' << format_optional(r.params.t_nc) << ','
           << format_optional(r.params.t_c) << ',' << csv_field(r.error) << '\n';
    }
    const bool any = std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.iou.has_value(); });
    if (any) {
        const EvalSummary s = summarize_rows(rows);
        os << "\ncategory,count,mean_iou\n";
        for (Category c : kCategories) {
            os << to_string(c) << ',' << s.of(c).count << ',' << format_optional(s.of(c).mean_iou) << '\n';
        }
        os << "all," << s.count << ',' << format_double(s.mean_iou) << '\n';
    }
    write_text(path, os.str());
}

Report read_report(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report " + path.string());
    Report rep;
    std::string line;
    int line_no = 0;
    enum { RowsHeader, Rows, SummaryHeader, Summary } state = RowsHeader;
    EvalSummary summary;
    bool have_summary = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (trim(line).empty()) {
            if (state == Rows) state = SummaryHeader;
            continue;
        }
        const auto f = split_csv_line(line);
        switch (state) {
        case RowsHeader:
            if (f.size() < 3 || f[0] != "shoe_id" || f[1] != "category" || f[2] != "iou") {
                throw DataError(where + ": expected header shoe_id,category,iou[,s,t_nc,t_c,error]");
            }
            state = Rows;
            break;
        case Rows: {
            if (f.size() < 3) throw DataError(where + ": expected at least 3 fields");
            ReportRow r;
            r.shoe_id = f[0];
            try {
                r.category = parse_category(trim(f[1]));
            } catch (const ArgumentError& e) {
                throw DataError(where + ": " + e.what());
            }
            auto opt = [&](std::size_t k) -> std::optional<double> {
                if (k >= f.size() || trim(f[k]).empty()) return std::nullopt;
                return parse_double(trim(f[k]), where);
            };
            r.iou = opt(2);
            r.params.s = opt(3);
            r.params.t_nc = opt(4);
            r.params.t_c = opt(5);
            if (f.size() > 6) r.error = f[6];
            rep.rows.push_back(std::move(r));
            break;
        }
        case SummaryHeader:
            if (f.size() != 3 || f[0] != "category") throw DataError(where + ": expected summary header");
            state = Summary;
            have_summary = true;
            break;
        case Summary: {
            if (f.size() != 3) throw DataError(where + ": expected 3 summary fields");
            const auto count = static_cast<std::size_t>(parse_double(f[1], where));
            if (f[0] == "all") {
                summary.count = count;
                summary.mean_iou = parse_double(f[2], where);
            } else {
                Category c;
                try {
                    c = parse_category(f[0]);
                } catch (const ArgumentError& e) {
                    throw DataError(where + ": " + e.what());
                }
                auto& st = summary.per_category[static_cast<int>(c)];
                st.count = count;
                if (!trim(f[2]).empty()) st.mean_iou = parse_double(f[2], where);
            }
            break;
        }
        }
    }
    if (state == RowsHeader) throw DataError(path.string() + ": empty report");
    if (have_summary) rep.summary = summary;
    return rep;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out = open_out(path, true);
    out << text;
    if (!out) throw DataError("cannot write " + path.string());
}

} // namespace treadkit
