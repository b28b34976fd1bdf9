#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "ocgs/checkpoint.hpp"
#include "ocgs/colmap.hpp"
#include "ocgs/error.hpp"
#include "ocgs/ingest.hpp"
#include "ocgs/mesh_io.hpp"
#include "ocgs/mesher.hpp"
#include "ocgs/metrics.hpp"
#include "ocgs/parallel.hpp"
#include "ocgs/rasterizer.hpp"
#include "ocgs/splat_io.hpp"
#include "ocgs/synth.hpp"
#include "ocgs/trainer.hpp"

namespace ocgs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage:
    case ErrorKind::config:
      return 1;
    case ErrorKind::numerical:
    case ErrorKind::parameter_corruption:
      return 3;
    default:
      return 2;
  }
}

fs::path sparse_dir(const fs::path& data) {
  for (const fs::path& p : {data / "sparse" / "0", data / "sparse", data})
    if (fs::exists(p / "cameras.txt") || fs::exists(p / "cameras.bin")) return p;
  throw Error(ErrorKind::ingest, "no COLMAP model (cameras.txt/.bin) under " + data.string());
}

struct Dataset {
  SparseModel model;
  std::vector<TrainingView> views;
};

Dataset load_dataset(const fs::path& data, const std::optional<fs::path>& masks) {
  Dataset d;
  d.model = parse_colmap(sparse_dir(data));
  d.views = load_views(d.model, data / "images", masks);
  return d;
}

Eigen::Vector3d parse_rgb(const std::string& s) {
  Eigen::Vector3d c;
  char sep1 = 0, sep2 = 0;
  std::istringstream is(s);
  if (!(is >> c[0] >> sep1 >> c[1] >> sep2 >> c[2]) || sep1 != ',' || sep2 != ',')
    throw Error(ErrorKind::usage, "expected r,g,b but got '" + s + "'");
  return c;
}

// Either a JSON file {width,height,fx,fy,cx,cy,qvec:[w,x,y,z],tvec:[x,y,z]} or the same
// 13 numbers inline, comma separated, in that order.
CameraView parse_camera(const std::string& spec) {
  std::vector<double> v;
  if (fs::exists(spec)) {
    std::ifstream is(spec);
    json j;
    try {
      is >> j;
      v = {j.at("width").get<double>(), j.at("height").get<double>(), j.at("fx").get<double>(),
           j.at("fy").get<double>(), j.at("cx").get<double>(), j.at("cy").get<double>()};
      for (double q : j.at("qvec").get<std::vector<double>>()) v.push_back(q);
      for (double t : j.at("tvec").get<std::vector<double>>()) v.push_back(t);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::format, "camera file " + spec + ": " + e.what());
    }
  } else {
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        v.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw Error(ErrorKind::usage, "bad number '" + tok + "' in camera spec");
      }
    }
  }
  if (v.size() != 13) throw Error(ErrorKind::usage, "camera spec needs 13 values (w,h,fx,fy,cx,cy,qw,qx,qy,qz,tx,ty,tz)");
  ColmapCamera c{1, "PINHOLE", static_cast<int>(v[0]), static_cast<int>(v[1]), {v[2], v[3], v[4], v[5]}};
  SparseModel m;
  m.cameras[1] = c;
  ImageRecord r;
  r.camera_id = 1;
  r.qvec = {v[6], v[7], v[8], v[9]};
  r.tvec = {v[10], v[11], v[12]};
  CameraView cam = m.camera_for(r);
  cam.validate();
  return cam;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::format, "cannot write " + path.string());
  os << text;
}

json number_or_inf(double x) { return std::isinf(x) ? json("inf") : json(x); }

std::vector<Eigen::Vector3d> read_points(const fs::path& path) { return read_mesh(path).vertices; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Object-centric 2D Gaussian splatting"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker cap (0 = all cores)");

  // train
  auto* train = app.add_subcommand("train", "optimize a model on a dataset");
  fs::path t_data, t_out;
  std::optional<fs::path> t_masks, t_config, t_resume;
  std::optional<double> t_gamma;
  std::optional<int> t_iters, t_stop;
  std::optional<std::uint64_t> t_seed;
  bool t_no_mask = false, t_no_occ = false, t_det = false;
  train->add_option("--data", t_data, "dataset directory (images/, sparse/0)")->required();
  train->add_option("--masks", t_masks, "mask directory (default DATA/masks when present)");
  train->add_option("--out", t_out, "output directory")->required();
  train->add_option("--config", t_config, "key = value config file");
  train->add_option("--gamma", t_gamma, "background loss weight");
  train->add_flag("--no-masking", t_no_mask, "train on full images without masks");
  train->add_flag("--no-occlusion-prune", t_no_occ, "disable occlusion-aware pruning");
  train->add_option("--iterations", t_iters);
  train->add_option("--seed", t_seed);
  train->add_flag("--deterministic", t_det);
  train->add_option("--stop-at", t_stop, "stop after N iterations and write OUT/checkpoint.ckpt");
  train->add_option("--resume", t_resume, "continue from a checkpoint (its config is used)");
  train->add_option("--threads", threads);

  // render
  auto* render = app.add_subcommand("render", "render a model from a camera");
  fs::path r_model, r_out;
  std::string r_camera, r_bg = "0,0,0";
  render->add_option("--model", r_model)->required();
  render->add_option("--camera", r_camera, "13 comma-separated values or a JSON file")->required();
  render->add_option("--out", r_out)->required();
  render->add_option("--background", r_bg);

  // census
  auto* census = app.add_subcommand("census", "count splats that never contribute to a training view");
  fs::path c_model, c_data, c_report;
  std::optional<fs::path> c_heat;
  census->add_option("--model", c_model)->required();
  census->add_option("--data", c_data)->required();
  census->add_option("--report", c_report)->required();
  census->add_option("--heatmap", c_heat, "directory for per-view overlays");

  // prune
  auto* prune = app.add_subcommand("prune", "remove splats that never contribute");
  fs::path p_model, p_data, p_out;
  prune->add_option("--model", p_model)->required();
  prune->add_option("--data", p_data)->required();
  prune->add_option("--out", p_out)->required();

  // mesh
  auto* mesh = app.add_subcommand("mesh", "TSDF fusion and marching cubes");
  fs::path m_model, m_data, m_out;
  std::string m_mode;
  std::optional<double> m_voxel, m_dtrunc;
  std::optional<fs::path> m_masks;
  std::size_t m_budget = std::size_t{1} << 26;
  mesh->add_option("--model", m_model)->required();
  mesh->add_option("--data", m_data)->required();
  mesh->add_option("--mode", m_mode)->required()->check(CLI::IsMember({"bounded", "object"}));
  mesh->add_option("--voxel-size", m_voxel);
  mesh->add_option("--dtrunc", m_dtrunc);
  mesh->add_option("--masks", m_masks);
  mesh->add_option("--voxel-budget", m_budget);
  mesh->add_option("--out", m_out)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "masked PSNR/SSIM of a model against a dataset");
  std::optional<fs::path> e_gt, e_model, e_masks, e_report;
  eval->add_option("--gt", e_gt);
  eval->add_option("--model", e_model);
  eval->add_option("--masks", e_masks);
  eval->add_option("--report", e_report);
  auto* chamfer = eval->add_subcommand("chamfer", "chamfer distance of a mesh to reference points");
  fs::path ch_mesh, ch_ref;
  std::size_t ch_samples = 100000;
  std::uint64_t ch_seed = 0;
  std::optional<fs::path> ch_report;
  chamfer->add_option("--mesh", ch_mesh)->required();
  chamfer->add_option("--ref-points", ch_ref)->required();
  chamfer->add_option("--samples", ch_samples);
  chamfer->add_option("--seed", ch_seed);
  chamfer->add_option("--report", ch_report);

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  std::string s_kind;
  fs::path s_out;
  std::uint64_t s_seed = 0;
  int s_views = 0, s_size = 0, s_hidden = 5;
  bool s_no_bg = false, s_hole = false;
  std::optional<double> s_defects;
  synth->add_option("kind", s_kind)->required()->check(CLI::IsMember({"sphere", "occluder", "badmask"}));
  synth->add_option("--out", s_out)->required();
  synth->add_option("--seed", s_seed);
  synth->add_option("--views", s_views);
  synth->add_option("--size", s_size, "image width and height");
  synth->add_flag("--no-background", s_no_bg);
  synth->add_option("--hidden", s_hidden, "occluder: planted hidden splats");
  synth->add_flag("--hole", s_hole, "badmask: consistent polar-cap hole in every mask");
  synth->add_option("--defect-fraction", s_defects, "badmask: fraction of views with a patch defect");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << json{{"error", "usage"}, {"message", e.what()}, {"exit", 1}}.dump() << "\n";
    return 1;
  }

  try {
    set_thread_count(threads);

    if (*train) {
      if (t_no_mask && t_masks) throw Error(ErrorKind::usage, "--masks and --no-masking are exclusive");
      if (!t_masks && !t_no_mask && fs::is_directory(t_data / "masks")) t_masks = t_data / "masks";
      TrainConfig cfg;
      std::optional<TrainState> state;
      if (t_resume) {
        state = load_checkpoint(*t_resume, &cfg);
      } else {
        if (t_config) cfg = load_config(*t_config, cfg);
        if (t_gamma) cfg.gamma_coeff = *t_gamma;
        if (t_no_mask) cfg.use_masks = false;
        if (t_no_occ) cfg.occlusion_prune = false;
        if (t_iters) cfg.iterations = *t_iters;
        if (t_seed) cfg.seed = *t_seed;
        if (t_det) cfg.deterministic = true;
        if (threads) cfg.threads = threads;
      }
      cfg.validate();
      if (cfg.use_masks && !t_masks) throw Error(ErrorKind::usage, "masking enabled but no --masks directory given");
      Dataset d = load_dataset(t_data, cfg.use_masks ? t_masks : std::nullopt);
      fs::create_directories(t_out);
      std::optional<Trainer> trainer;
      if (state) {
        trainer.emplace(std::move(d.views), std::move(*state), cfg);
      } else {
        trainer.emplace(std::move(d.views), init_splats(d.model, cfg.sh_degree_max), cfg);
      }
      trainer->set_diagnostics_path(t_out / "diverged.ply");
      save_config(t_out / "config.txt", cfg);
      std::ofstream log(t_out / "log.jsonl", state ? std::ios::app : std::ios::trunc);
      const int until = t_stop ? std::min(*t_stop, cfg.iterations) : cfg.iterations;
      trainer->run(until, &log);
      const TrainState& st = trainer->state();
      if (st.iteration < cfg.iterations) {
        save_checkpoint(t_out / "checkpoint.ckpt", st, cfg);
      } else {
        save_splats(t_out / "model.ply", st.splats);
      }
      out << json{{"iterations", st.iteration},
                  {"splats", st.splats.size()},
                  {"cloned", st.counters.cloned},
                  {"split", st.counters.split},
                  {"pruned", st.counters.pruned},
                  {"finished", st.iteration >= cfg.iterations}}
                 .dump()
          << "\n";
      return 0;
    }

    if (*render) {
      const SplatSet s = load_splats(r_model);
      RenderOptions opt;
      opt.background = parse_rgb(r_bg);
      write_png(r_out, render_forward(s, parse_camera(r_camera), opt).color);
      return 0;
    }

    if (*census) {
      const SplatSet s = load_splats(c_model);
      const Dataset d = load_dataset(c_data, std::nullopt);
      const OcclusionReport rep = occlusion_census(s, d.views);
      write_text(c_report, census_record(rep) + "\n");
      if (c_heat) write_occlusion_heatmaps(*c_heat, s, rep, d.views);
      out << census_record(rep) << "\n";
      return 0;
    }

    if (*prune) {
      SplatSet s = load_splats(p_model);
      const Dataset d = load_dataset(p_data, std::nullopt);
      const OcclusionReport rep = post_train_occlusion_prune(s, d.views);
      save_splats(p_out, s);
      out << census_record(rep) << "\n";
      return 0;
    }

    if (*mesh) {
      const SplatSet s = load_splats(m_model);
      TriangleMesh tm;
      if (m_mode == "object") {
        if (m_voxel || m_dtrunc || m_masks)
          throw Error(ErrorKind::usage, "object mode takes no --voxel-size, --dtrunc or --masks");
        const Dataset d = load_dataset(m_data, std::nullopt);
        tm = marching_cubes(fuse_object(s, d.views, m_budget));
      } else {
        if (!m_voxel || !m_dtrunc) throw Error(ErrorKind::usage, "bounded mode needs --voxel-size and --dtrunc");
        const Dataset d = load_dataset(m_data, m_masks);
        FusionParams fp;
        fp.voxel_size = *m_voxel;
        fp.d_trunc = *m_dtrunc;
        fp.voxel_budget = m_budget;
        tm = marching_cubes(fuse_bounded(s, d.views, fp, m_masks.has_value()));
      }
      write_mesh(m_out, tm);
      out << json{{"vertices", tm.vertices.size()}, {"triangles", tm.triangles.size()}}.dump() << "\n";
      return 0;
    }

    if (*chamfer) {
      const TriangleMesh tm = read_mesh(ch_mesh);
      const auto ref = read_points(ch_ref);
      const double cd = tm.triangles.empty() ? chamfer_distance(tm.vertices, ref)
                                             : chamfer_distance(tm, ref, ch_samples, ch_seed);
      const std::string line = json{{"chamfer", cd}, {"reference_points", ref.size()}}.dump();
      if (ch_report) write_text(*ch_report, line + "\n");
      out << line << "\n";
      return 0;
    }

    if (*eval) {
      if (!e_gt || !e_model || !e_masks || !e_report)
        throw Error(ErrorKind::usage, "eval needs --gt, --model, --masks and --report");
      const SplatSet s = load_splats(*e_model);
      const Dataset d = load_dataset(*e_gt, e_masks);
      std::ostringstream rep;
      double sum_psnr = 0.0, sum_ssim = 0.0;
      for (const TrainingView& v : d.views) {
        const Image r = render_forward(s, v.camera).color;
        const double p = masked_psnr(v.image, r, v.mask), q = masked_ssim(v.image, r, v.mask);
        sum_psnr += p;
        sum_ssim += q;
        rep << json{{"view", v.name}, {"masked_psnr", number_or_inf(p)}, {"masked_ssim", q}}.dump() << "\n";
      }
      const double n = static_cast<double>(d.views.size());
      const std::string summary =
          json{{"views", d.views.size()}, {"masked_psnr", number_or_inf(sum_psnr / n)}, {"masked_ssim", sum_ssim / n}}
              .dump();
      rep << summary << "\n";
      write_text(*e_report, rep.str());
      out << summary << "\n";
      return 0;
    }

    if (*synth) {
      if (s_kind == "occluder") {
        OccluderSceneParams p;
        p.seed = s_seed;
        p.n_hidden = s_hidden;
        if (s_views) p.n_views = s_views;
        if (s_size) p.width = p.height = s_size;
        const OccluderScene sc = make_occluder_scene(p);
        write_dataset(s_out, sc.views, sparse_model_for(sc.views));
        save_splats(s_out / "model.ply", sc.splats);
        write_text(s_out / "hidden.json",
                   json{{"hidden_indices", sc.hidden_indices}, {"out_of_frustum_indices", sc.out_of_frustum_indices}}
                           .dump() +
                       "\n");
        return 0;
      }
      auto apply = [&](SphereSceneParams& p) {
        p.seed = s_seed;
        if (s_views) p.n_views = s_views;
        if (s_size) p.width = p.height = s_size;
        if (s_no_bg) p.with_background = false;
      };
      TriangleMesh ref;
      if (s_kind == "sphere") {
        SphereSceneParams p;
        apply(p);
        const SphereScene sc = make_sphere_scene(p);
        write_dataset(s_out, sc.views, sc.model);
        ref.vertices = sc.surface_points;
      } else {
        ErroneousMaskParams p;
        apply(p.base);
        p.consistent_hole = s_hole;
        if (s_defects) p.defect_fraction = *s_defects;
        const ErroneousMaskScene sc = make_erroneous_mask_scene(p);
        write_dataset(s_out, sc.scene.views, sc.scene.model);
        fs::create_directories(s_out / "defects");
        for (std::size_t i = 0; i < sc.defect_maps.size(); ++i)
          write_png(s_out / "defects" / sc.scene.views[i].name, sc.defect_maps[i]);
        ref.vertices = sc.scene.surface_points;
      }
      write_mesh_ply(s_out / "ref_points.ply", ref);
      return 0;
    }
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    err << json{{"error", to_string(e.kind())}, {"message", e.what()}, {"exit", code}}.dump() << "\n";
    return code;
  } catch (const fs::filesystem_error& e) {
    err << json{{"error", "io"}, {"message", e.what()}, {"exit", 2}}.dump() << "\n";
    return 2;
  }
  return 1;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace ocgs
