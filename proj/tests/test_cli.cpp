#include <gtest/gtest.h>

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "helpers.hpp"
#include "ocgs/splat_io.hpp"

using namespace ocgs;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

// one small dataset and config shared by the pipeline tests
struct Fixture {
  testing_helpers::TempDir dir{"cli"};
  fs::path data, config;
  Fixture() {
    data = dir.path / "data";
    EXPECT_EQ(cli({"synth", "sphere", "--out", data.string(), "--views", "4", "--size", "24", "--no-background",
                   "--seed", "2"})
                  .code,
              0);
    config = dir.path / "tiny.cfg";
    std::ofstream(config) << "# short schedule\niterations = 40\ndensify_from_iter = 10\ndensify_interval = 10\n"
                             "opacity_reset_interval = 30\nsh_degree_max = 1\n";
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  EXPECT_EQ(cli({"train", "--data", "x"}).code, 1);  // --out missing
  EXPECT_EQ(cli({"--help"}).code, 0);
  const CliRun r = cli({"render", "--model", "nope.ply", "--camera", "1,2,3", "--out", "x.png"});
  EXPECT_NE(r.code, 0);
  EXPECT_NO_THROW(nlohmann::json::parse(r.err));
}

TEST(Cli, DataErrorsReportKind) {
  const CliRun r = cli({"train", "--data", "/nonexistent/ocgs", "--out", "/tmp/ocgs_cli_never", "--no-masking"});
  EXPECT_EQ(r.code, 2);
  const auto j = nlohmann::json::parse(r.err);
  EXPECT_EQ(j["error"], "ingest");
  EXPECT_EQ(j["exit"], 2);
}

TEST(Cli, BadConfigIsExitOne) {
  auto& f = fixture();
  const fs::path bad = f.dir.path / "bad.cfg";
  std::ofstream(bad) << "no_such_key = 3\n";
  const CliRun r = cli({"train", "--data", f.data.string(), "--out", (f.dir.path / "o").string(), "--config",
                     bad.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "config");
}

TEST(Cli, TrainIsDeterministicAndResumable) {
  auto& f = fixture();
  const fs::path a = f.dir.path / "a", b = f.dir.path / "b", c = f.dir.path / "c";
  for (const fs::path& o : {a, b})
    ASSERT_EQ(cli({"train", "--data", f.data.string(), "--out", o.string(), "--config", f.config.string(),
                   "--deterministic"})
                  .code,
              0);
  EXPECT_EQ(slurp(a / "model.ply"), slurp(b / "model.ply"));
  EXPECT_FALSE(slurp(a / "log.jsonl").empty());

  ASSERT_EQ(cli({"train", "--data", f.data.string(), "--out", c.string(), "--config", f.config.string(),
                 "--deterministic", "--stop-at", "17"})
                .code,
            0);
  ASSERT_TRUE(fs::exists(c / "checkpoint.ckpt"));
  EXPECT_FALSE(fs::exists(c / "model.ply"));
  const CliRun r = cli({"train", "--data", f.data.string(), "--out", c.string(), "--resume",
                     (c / "checkpoint.ckpt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["finished"], true);
  EXPECT_EQ(slurp(a / "model.ply"), slurp(c / "model.ply"));
}

TEST(Cli, DownstreamCommands) {
  auto& f = fixture();
  const fs::path o = f.dir.path / "down";
  ASSERT_EQ(cli({"train", "--data", f.data.string(), "--out", o.string(), "--config", f.config.string()}).code, 0);
  const std::string model = (o / "model.ply").string();

  const CliRun cen = cli({"census", "--model", model, "--data", f.data.string(), "--report", (o / "census.json").string(),
                       "--heatmap", (o / "heat").string()});
  ASSERT_EQ(cen.code, 0) << cen.err;
  const auto j = nlohmann::json::parse(slurp(o / "census.json"));
  EXPECT_EQ(j["total"], load_splats(model).size());
  EXPECT_TRUE(fs::exists(o / "heat" / "heatmap_000.png"));

  ASSERT_EQ(cli({"prune", "--model", model, "--data", f.data.string(), "--out", (o / "pruned.ply").string()}).code, 0);
  EXPECT_EQ(load_splats(o / "pruned.ply").size(), j["total"].get<std::size_t>() - j["occluded"].get<std::size_t>());

  const CliRun ev = cli({"eval", "--gt", f.data.string(), "--model", model, "--masks", (f.data / "masks").string(),
                      "--report", (o / "eval.jsonl").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_GT(nlohmann::json::parse(ev.out)["masked_psnr"].get<double>(), 10.0);

  const CliRun me = cli({"mesh", "--model", model, "--data", f.data.string(), "--mode", "object", "--out",
                      (o / "mesh.ply").string()});
  ASSERT_EQ(me.code, 0) << me.err;
  EXPECT_EQ(cli({"mesh", "--model", model, "--data", f.data.string(), "--mode", "object", "--voxel-size", "0.1",
                 "--out", (o / "m2.ply").string()})
                .code,
            1);
  EXPECT_EQ(cli({"mesh", "--model", model, "--data", f.data.string(), "--mode", "bounded", "--out",
                 (o / "m3.ply").string()})
                .code,
            1);

  if (nlohmann::json::parse(me.out)["triangles"].get<std::size_t>() > 0) {
    const CliRun ch = cli({"eval", "chamfer", "--mesh", (o / "mesh.ply").string(), "--ref-points",
                        (f.data / "ref_points.ply").string(), "--samples", "2000"});
    ASSERT_EQ(ch.code, 0) << ch.err;
    EXPECT_LT(nlohmann::json::parse(ch.out)["chamfer"].get<double>(), 0.5);
  }

  // inline camera: identity rotation three units back from the origin
  const CliRun rr = cli({"render", "--model", model, "--camera", "24,24,20,20,12,12,1,0,0,0,0,0,3", "--out",
                      (o / "view.png").string(), "--background", "0,0,0"});
  ASSERT_EQ(rr.code, 0) << rr.err;
  EXPECT_TRUE(fs::exists(o / "view.png"));
  EXPECT_EQ(cli({"render", "--model", model, "--camera", "1,2", "--out", (o / "v2.png").string()}).code, 1);
}

TEST(Cli, SynthKinds) {
  testing_helpers::TempDir d("cli_synth");
  ASSERT_EQ(cli({"synth", "occluder", "--out", (d.path / "occ").string(), "--hidden", "3"}).code, 0);
  const auto h = nlohmann::json::parse(slurp(d.path / "occ" / "hidden.json"));
  EXPECT_EQ(h["hidden_indices"].size(), 3u);
  const CliRun cen = cli({"census", "--model", (d.path / "occ" / "model.ply").string(), "--data",
                       (d.path / "occ").string(), "--report", (d.path / "occ.json").string()});
  ASSERT_EQ(cen.code, 0) << cen.err;
  EXPECT_EQ(nlohmann::json::parse(cen.out)["in_frustum_occluded"], 3);

  ASSERT_EQ(cli({"synth", "badmask", "--out", (d.path / "bad").string(), "--views", "10", "--size", "32", "--hole"})
                .code,
            0);
  EXPECT_TRUE(fs::exists(d.path / "bad" / "defects"));
}
