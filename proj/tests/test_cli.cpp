#include <treadkit/cli.hpp>
#include <treadkit/io.hpp>

#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <initializer_list>
#include <sstream>

using namespace treadkit;

namespace {

struct CliRun {
    int code = -1;
    std::string out, err;
};

CliRun cli(std::initializer_list<std::string> args) {
    std::vector<std::string> owned = {"treadkit"};
    owned.insert(owned.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : owned) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

RgbGrid orange_blocks(int w, int h) {
    RgbGrid img(w, h, Rgb{1.0, 1.0, 1.0});
    for (int y = 4; y < h - 4; ++y) {
        for (int x = 4; x < w - 4; ++x) {
            if ((x / 6 + y / 6) % 2 == 0) img(x, y) = Rgb{1.0, 0.5, 0.0};
        }
    }
    return img;
}

std::vector<fs::path> files_under(const fs::path& root) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
    }
    std::sort(out.begin(), out.end());
    return out;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / (std::string("treadkit_cli_") + info->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string p(const std::string& name) const { return (dir / name).string(); }

    void one_print_manifest() {
        write_png(dir / "print.png", orange_blocks(48, 72));
        write_text(dir / "in.jsonl", R"({"shoe_id":"s1","category":"formal","image_path":"print.png"})" "\n");
    }

    fs::path dir;
};

} // namespace

TEST_F(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(cli({"--help"}).code, kExitOk);
    EXPECT_EQ(cli({}).code, kExitUsage);
    EXPECT_EQ(cli({"bogus"}).code, kExitUsage);
    EXPECT_EQ(cli({"predict-print", "--depth", p("x.pfm")}).code, kExitUsage);  // --out missing
    EXPECT_EQ(cli({"--config", p("none.cfg"), "config"}).code, kExitUsage);
}

TEST_F(Cli, SynthWritesOneRenderPerVariantAndIsReproducible) {
    one_print_manifest();
    const CliRun a = cli({"synth", "--manifest", p("in.jsonl"), "--out", p("a"), "--variants", "10",
                       "--lights", "1", "--seed", "7"});
    ASSERT_EQ(a.code, kExitOk) << a.err;
    const auto files = files_under(dir / "a");
    const auto count = [&](const std::string& prefix, const std::string& ext) {
        return std::count_if(files.begin(), files.end(), [&](const fs::path& f) {
            return f.filename().string().rfind(prefix, 0) == 0 && f.extension() == ext;
        });
    };
    EXPECT_EQ(count("render_", ".png"), 10);
    EXPECT_EQ(count("depth_", ".pfm"), 10);
    EXPECT_EQ(count("albedo_", ".png"), 10);
    EXPECT_TRUE(fs::exists(dir / "a" / "lights.json"));
    const auto manifest = read_manifest(dir / "a" / "manifest.jsonl");
    ASSERT_EQ(manifest.size(), 10u);
    EXPECT_EQ(manifest[0].category, Category::Formal);
    EXPECT_EQ(manifest[3].extra["source_id"], "s1");
    EXPECT_TRUE(manifest[3].depth_path && fs::exists(*manifest[3].depth_path));

    const CliRun b = cli({"--threads", "1", "synth", "--manifest", p("in.jsonl"), "--out", p("b"),
                       "--variants", "10", "--lights", "1", "--seed", "7"});
    ASSERT_EQ(b.code, kExitOk) << b.err;
    ASSERT_EQ(files_under(dir / "b"), files);
    for (const auto& f : files) EXPECT_EQ(read_text(dir / "a" / f), read_text(dir / "b" / f)) << f;

    const CliRun c = cli({"synth", "--manifest", p("in.jsonl"), "--out", p("c"), "--variants", "10", "--seed", "8"});
    ASSERT_EQ(c.code, kExitOk);
    EXPECT_NE(read_text(dir / "a" / "s1" / "depth_v00.pfm"), read_text(dir / "c" / "s1" / "depth_v00.pfm"));
}

TEST_F(Cli, SynthRejectsBadCountsAndEmptyManifest) {
    one_print_manifest();
    EXPECT_EQ(cli({"synth", "--manifest", p("in.jsonl"), "--out", p("o"), "--variants", "9"}).code, kExitUsage);
    EXPECT_EQ(cli({"synth", "--manifest", p("in.jsonl"), "--out", p("o"), "--variants", "16"}).code, kExitUsage);
    write_text(dir / "empty.jsonl", "");
    const CliRun r = cli({"synth", "--manifest", p("empty.jsonl"), "--out", p("o")});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("no entries"), std::string::npos);
}

TEST_F(Cli, EvalAndSummarize) {
    DepthGrid depth(16, 16, 0.8);
    PrintMask gt(16, 16);
    for (int y = 3; y < 12; ++y) {
        for (int x = 2; x < 9; ++x) {
            depth(x, y) = 0.2;
            gt(x, y) = 1;
        }
    }
    write_pfm(dir / "d.pfm", depth);
    write_print_png(dir / "gt.png", gt);
    write_text(dir / "eval.jsonl",
               R"({"shoe_id":"a","category":"new-athletic","image_path":"gt.png","depth_path":"d.pfm","gt_print_path":"gt.png"})" "\n"
               R"({"shoe_id":"b","category":"used","image_path":"gt.png","depth_path":"d.pfm","gt_print_path":"gt.png"})" "\n");
    const CliRun r = cli({"eval", "--manifest", p("eval.jsonl"), "--report", p("r.csv"), "--label", "Test"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("100.0"), std::string::npos);
    const Report rep = read_report(dir / "r.csv");
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_EQ(rep.rows[0].iou, 1.0);

    const CliRun s = cli({"summarize", "--report", p("r.csv"), "--label", "Test"});
    EXPECT_EQ(s.code, kExitOk);
    EXPECT_EQ(s.out, r.out);

    // A broken row is reported, the rest still evaluated.
    write_pfm(dir / "small.pfm", DepthGrid(8, 8, 0.5));
    write_text(dir / "bad.jsonl",
               R"({"shoe_id":"a","category":"formal","image_path":"gt.png","depth_path":"d.pfm","gt_print_path":"gt.png"})" "\n"
               R"({"shoe_id":"b","category":"formal","image_path":"gt.png","depth_path":"small.pfm","gt_print_path":"gt.png"})" "\n");
    const CliRun bad = cli({"eval", "--manifest", p("bad.jsonl"), "--report", p("bad.csv")});
    EXPECT_EQ(bad.code, kExitDataError);
    EXPECT_NE(bad.err.find("b:"), std::string::npos);
    const Report brep = read_report(dir / "bad.csv");
    EXPECT_FALSE(brep.rows[1].iou.has_value());
    EXPECT_FALSE(brep.rows[1].error.empty());
}

TEST_F(Cli, SummarizeDetectsTamperedSummary) {
    write_report(dir / "r.csv", {{"a", Category::Used, 0.5, {}, ""}});
    std::string text = read_text(dir / "r.csv");
    const auto pos = text.rfind("0.5");
    text.replace(pos, 3, "0.6");
    write_text(dir / "r.csv", text);
    EXPECT_EQ(cli({"summarize", "--report", p("r.csv")}).code, kExitDataError);
}

TEST_F(Cli, PredictPrintOnConstantDepthIsEmpty) {
    write_pfm(dir / "d.pfm", DepthGrid(20, 30, 0.5));
    ASSERT_EQ(cli({"predict-print", "--depth", p("d.pfm"), "--out", p("p.png")}).code, kExitOk);
    EXPECT_FALSE(read_print_png(dir / "p.png").any());
    EXPECT_EQ(cli({"predict-print", "--depth", p("missing.pfm"), "--out", p("p.png")}).code, kExitDataError);
}

TEST_F(Cli, AlignPrintsIdentity) {
    PrintMask print(30, 20);
    for (int y = 5; y < 15; ++y) {
        for (int x = 3; x < 12; ++x) print(x, y) = 1;
    }
    write_print_png(dir / "a.png", print);
    write_print_png(dir / "b.png", print);
    write_correspondences(dir / "c.csv", {{{0, 0}, {0, 0}}, {{29, 0}, {29, 0}}, {{0, 19}, {0, 19}}, {{29, 19}, {29, 19}}});
    const CliRun r = cli({"align-prints", "--print", p("a.png"), "--corr", p("c.csv"), "--print", p("b.png"),
                       "--corr", p("c.csv"), "--size", "30x20", "--out", p("gt.png")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(read_print_png(dir / "gt.png"), print);
    EXPECT_EQ(cli({"align-prints", "--print", p("a.png"), "--corr", p("c.csv"), "--out", p("gt.png")}).code,
              kExitUsage);
}

TEST_F(Cli, PseudoAlbedoAndPalette) {
    RgbGrid img(134, 300, Rgb{200 / 255.0, 40 / 255.0, 40 / 255.0});
    for (int y = 0; y < 300; ++y) {
        for (int x = 70; x < 134; ++x) img(x, y) = Rgb{30 / 255.0, 30 / 255.0, 30 / 255.0};
    }
    write_png(dir / "img.png", img);
    ASSERT_EQ(cli({"pseudo-albedo", "--image", p("img.png"), "--out", p("alb.png")}).code, kExitOk);
    EXPECT_EQ(read_png_rgb(dir / "alb.png"), img);
    ASSERT_EQ(cli({"palette", "--image", p("img.png"), "--out", p("pal.json")}).code, kExitOk);
    const Palette pal = read_palette(dir / "pal.json");
    ASSERT_EQ(pal.entries.size(), 2u);
    EXPECT_NEAR(pal.entries[0].proportion, 70.0 / 134.0, 1e-12);
}

TEST_F(Cli, TtaExpandThenMerge) {
    RgbGrid img(40, 60, Rgb{0.5, 0.5, 0.5});
    write_png(dir / "img.png", img);
    fs::create_directories(dir / "tta");
    ASSERT_EQ(cli({"tta", "expand", "--image", p("img.png"), "--out", p("tta")}).code, kExitOk);
    const auto doc = nlohmann::json::parse(read_text(dir / "tta" / "tta.json"));
    ASSERT_EQ(doc["variants"].size(), 23u);
    for (const auto& v : doc["variants"]) {
        EXPECT_TRUE(fs::exists(dir / "tta" / v["image"].get<std::string>()));
        write_pfm(dir / "tta" / v["depth"].get<std::string>(),
                  DepthGrid(v["width"].get<int>(), v["height"].get<int>(), 0.25));
    }
    write_pfm(dir / "orig.pfm", DepthGrid(40, 60, 0.25));
    ASSERT_EQ(cli({"tta", "merge", "--manifest", p("tta/tta.json"), "--original", p("orig.pfm"), "--out",
                   p("merged.pfm")}).code,
              kExitOk);
    const DepthGrid merged = read_pfm(dir / "merged.pfm");
    for (double v : merged.values()) EXPECT_EQ(v, 0.25);
    fs::remove(dir / "tta" / "rot+5.pfm");
    EXPECT_EQ(cli({"tta", "merge", "--manifest", p("tta/tta.json"), "--original", p("orig.pfm"), "--out",
                   p("merged.pfm")}).code,
              kExitDataError);
}

TEST_F(Cli, LightsAndConfig) {
    ASSERT_EQ(cli({"lights", "--out", p("l.json")}).code, kExitOk);
    EXPECT_EQ(read_light_table(dir / "l.json").size(), 17u);
    const CliRun c = cli({"config"});
    EXPECT_EQ(c.code, kExitOk);
    write_text(dir / "t.cfg", c.out);
    const CliRun again = cli({"--config", p("t.cfg"), "config"});
    EXPECT_EQ(again.out, c.out);
    write_text(dir / "bad.cfg", "[synth]\nnope = 1\n");
    EXPECT_EQ(cli({"--config", p("bad.cfg"), "config"}).code, kExitUsage);
}
