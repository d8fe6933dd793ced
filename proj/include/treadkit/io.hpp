#pragma once

#include <treadkit/alignment.hpp>
#include <treadkit/appearance.hpp>
#include <treadkit/grid.hpp>
#include <treadkit/metric.hpp>
#include <treadkit/renderer.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace treadkit {

namespace fs = std::filesystem;

// All readers throw DataError on missing or malformed files; writers throw
// DataError when the file cannot be written.

/// Portable float map, single channel ("Pf"), little-endian (scale -1),
/// rows stored bottom to top. Reading also accepts big-endian files.
void write_pfm(const fs::path& path, const GrayGrid& img);
GrayGrid read_pfm(const fs::path& path);

/// 8-bit PNG. Colour values are clamped to [0, 1] and rounded to the nearest level.
void write_png(const fs::path& path, const RgbGrid& img);
void write_png(const fs::path& path, const GrayGrid& img);
RgbGrid read_png_rgb(const fs::path& path);
GrayGrid read_png_gray(const fs::path& path);

/// Masks: 255 inside, 0 outside; reading keeps pixels >= 128.
void write_mask_png(const fs::path& path, const RegionMask& mask);
RegionMask read_mask_png(const fs::path& path);

/// Prints are stored ink dark (0 = full ink, 255 = paper). Ink values in [0, 1].
void write_print_png(const fs::path& path, const PrintMask& print);
GrayGrid read_print_ink(const fs::path& path);
PrintMask read_print_png(const fs::path& path);

/// CSV with header src_x,src_y,dst_x,dst_y.
Correspondences read_correspondences(const fs::path& path);
void write_correspondences(const fs::path& path, const Correspondences& c);

/// One JSON object per line. Paths are resolved against the manifest's
/// directory on load and written relative to it.
struct ManifestEntry {
    std::string shoe_id;
    std::optional<Category> category;
    fs::path image_path;
    std::optional<fs::path> mask_path;
    std::optional<fs::path> gt_print_path;
    std::optional<fs::path> depth_path;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();  // any other keys, kept in order
};

/// Throws DataError on malformed lines, duplicate ids or referenced files that do not exist.
std::vector<ManifestEntry> read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries);

void write_palette(const fs::path& path, const Palette& palette);
Palette read_palette(const fs::path& path);

void write_light_table(const fs::path& path, const std::vector<LightConfig>& lights);
std::vector<LightConfig> read_light_table(const fs::path& path);

/// One evaluated entry. iou is unset for entries that failed (with `error` set).
struct ReportRow {
    std::string shoe_id;
    Category category = Category::NewAthletic;
    std::optional<double> iou;
    MatchParams params;
    std::string error;
};

struct Report {
    std::vector<ReportRow> rows;
    std::optional<EvalSummary> summary;  // as stored in the file, if present
};

/// Rows (shoe_id,category,iou,s,t_nc,t_c,error) at full precision, then a
/// blank line and a summary block (category,count,mean_iou) over the rows
/// that have an IoU.
void write_report(const fs::path& path, const std::vector<ReportRow>& rows);
Report read_report(const fs::path& path);

/// aggregate() over the rows that carry an IoU.
EvalSummary summarize_rows(const std::vector<ReportRow>& rows);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Minimal CSV: fields separated by commas, optional double quotes with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_field(const std::string& s);

} // namespace treadkit
