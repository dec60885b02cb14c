/* Copyright 2026 The voxpan Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// voxpan command-line tool. Every subcommand prints one JSON document to
// stdout; failures print {"error": {...}} to stderr and exit nonzero.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "voxpan/error.h"
#include "voxpan/grad_suite.h"
#include "voxpan/io.h"
#include "voxpan/metrics.h"
#include "voxpan/refine.h"
#include "voxpan/scene.h"
#include "voxpan/sparsify.h"
#include "voxpan/supervision.h"
#include "voxpan/temporal.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace voxpan::cli {
namespace {

constexpr int kExitError = 2;
constexpr int kExitUsage = 64;
constexpr int kExitCheckFailed = 3;

struct Globals {
  std::uint64_t seed = 0;
  std::string profile = "tiny";
  std::string out_dir = ".";

  Profile parsed_profile() const { return parse_profile(profile); }
  fs::path out(const std::string& path) const {
    const fs::path p(path);
    return p.is_absolute() ? p : fs::path(out_dir) / p;
  }
};

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

std::vector<double> parse_ratios(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      require(used == item.size(), ErrorCode::kInvalidArgument, "bad ratio: " + item);
    } catch (const std::logic_error&) {
      fail(ErrorCode::kInvalidArgument, "bad ratio: " + item);
    }
  }
  require(!out.empty(), ErrorCode::kInvalidArgument, "no ratios given");
  return out;
}

// "2x2x2,2x2x1,1x1x1"
std::vector<std::array<int, 3>> parse_factors(const std::string& text) {
  std::vector<std::array<int, 3>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::array<int, 3> f{};
    char x1 = 0, x2 = 0;
    std::istringstream is(item);
    is >> f[0] >> x1 >> f[1] >> x2 >> f[2];
    require(is && x1 == 'x' && x2 == 'x' && is.peek() == EOF,
            ErrorCode::kInvalidArgument, "bad factor triple: " + item);
    out.push_back(f);
  }
  require(!out.empty(), ErrorCode::kInvalidArgument, "no factors given");
  return out;
}

Taxonomy load_taxonomy(const std::string& path) {
  if (path.empty()) return Taxonomy::nuscenes_like();
  try {
    return taxonomy_from_json(json::parse(io::read_text(path)));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed classes file: ") + e.what());
  }
}

VoxelGridSpec load_spec(const std::string& path, const Globals& g) {
  if (path.empty()) return profile_grids(g.parsed_profile()).fine;
  try {
    return io::spec_from_json(json::parse(io::read_text(path)));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed spec file: ") + e.what());
  }
}

std::vector<int> all_classes(const Taxonomy& t) {
  std::vector<int> c;
  for (int k = 1; k <= t.num_classes; ++k) c.push_back(k);
  return c;
}

json pq_json(const PQStats& s) {
  json classes = json::array();
  for (const ClassPQ& c : s.classes) {
    classes.push_back({{"class", c.cls}, {"thing", c.thing}, {"pq", c.pq}, {"sq", c.sq},
                       {"rq", c.rq}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}});
  }
  return {{"pq", s.pq}, {"sq", s.sq}, {"rq", s.rq}, {"pq_things", s.pq_things},
          {"pq_stuff", s.pq_stuff}, {"classes", classes}};
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"voxpan: panoptic occupancy toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--profile", g.profile, "Grid profile")
      ->check(CLI::IsMember({"tiny", "paper"}))
      ->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths")
      ->capture_default_str();

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "Generate a synthetic scene");
  SceneConfig cfg;
  gen->add_option("--boxes", cfg.num_boxes, "Number of thing boxes")->capture_default_str();
  gen->add_option("--frames", cfg.frames, "Frames including the current one")
      ->capture_default_str();
  gen->add_option("--cameras", cfg.num_cameras, "Cameras in the ring")->capture_default_str();

  // voxelize
  auto* vox = app.add_subcommand("voxelize", "Majority-vote voxelization of a PPTS cloud");
  std::string vox_spec, vox_in, vox_out = "grid.pvox", classes_path;
  int vox_classes = 16;
  vox->add_option("--spec", vox_spec, "Grid spec JSON (default: profile fine grid)");
  vox->add_option("--in", vox_in, "Input PPTS")->required();
  vox->add_option("--out", vox_out, "Output semantic PVOX")->capture_default_str();
  vox->add_option("--num-classes", vox_classes, "Class count C")->capture_default_str();

  // align
  auto* align = app.add_subcommand("align", "Resample a history volume into the current frame");
  std::string align_in, align_pose, align_out = "aligned.pvox";
  align->add_option("--in", align_in, "History dense PVOX")->required();
  align->add_option("--pose", align_pose, "Current-to-history pose JSON")->required();
  align->add_option("--out", align_out, "Output dense PVOX")->capture_default_str();

  // sparsify
  auto* sp = app.add_subcommand("sparsify", "Sparse coarse-to-fine cascade");
  std::string sp_in, sp_out = "sparse.pvox", sp_mask, sp_ratios = "0.2,0.5,0.5", sp_factors;
  std::string sp_map = "trilinear";
  sp->add_option("--in", sp_in, "Coarse dense PVOX")->required();
  sp->add_option("--out", sp_out, "Fine dense PVOX, zero outside kept cells")
      ->capture_default_str();
  sp->add_option("--out-mask", sp_mask, "Optional kept-cell mask PVOX");
  sp->add_option("--ratios", sp_ratios, "Keep ratio per stage")->capture_default_str();
  sp->add_option("--factors", sp_factors, "Stage factors, e.g. 2x2x2,2x2x1,1x1x1");
  sp->add_option("--map", sp_map, "Upsampling map")
      ->check(CLI::IsMember({"trilinear", "copy"}))
      ->capture_default_str();

  // refine
  auto* ref = app.add_subcommand("refine", "Box-driven semantic refinement and instances");
  std::string ref_grid, ref_boxes, ref_sem = "refined_sem.pvox", ref_inst = "refined_inst.pvox";
  double tau = kDefaultRefineTau, overlap = kDefaultOverlapThreshold;
  ref->add_option("--grid", ref_grid, "Semantic PVOX")->required();
  ref->add_option("--boxes", ref_boxes, "Boxes JSONL")->required();
  ref->add_option("--tau", tau, "Score threshold")->capture_default_str();
  ref->add_option("--overlap", overlap, "Overlap threshold")->capture_default_str();
  ref->add_option("--out-sem", ref_sem, "Output semantic PVOX")->capture_default_str();
  ref->add_option("--out-inst", ref_inst, "Output instance PVOX")->capture_default_str();
  ref->add_option("--classes", classes_path, "Taxonomy JSON (default: 10 things, 6 stuff)");

  // eval
  auto* ev = app.add_subcommand("eval", "mIoU, PQ or PQ-dagger of a prediction");
  std::string ev_mode = "miou", ev_pred, ev_gt, ev_pred_inst, ev_gt_inst, ev_mask;
  ev->add_option("--mode", ev_mode, "Metric")
      ->check(CLI::IsMember({"miou", "pq", "pqd"}))
      ->capture_default_str();
  ev->add_option("--pred", ev_pred, "Predicted semantic PVOX")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth semantic PVOX")->required();
  ev->add_option("--pred-inst", ev_pred_inst, "Predicted instance PVOX (pq, pqd)");
  ev->add_option("--gt-inst", ev_gt_inst, "Ground-truth instance PVOX (pq, pqd)");
  ev->add_option("--mask", ev_mask, "Evaluation mask PVOX (miou)");
  ev->add_option("--classes", classes_path, "Taxonomy JSON (default: 10 things, 6 stuff)");

  // loss-check
  auto* lc = app.add_subcommand("loss-check", "Finite-difference gradient suite");
  int instances = 100;
  lc->add_option("--instances", instances, "Random instances per suite")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // run-pipeline
  auto* rp = app.add_subcommand("run-pipeline", "End-to-end pipeline with metrics");
  std::string rp_scene, rp_mode = "oracle", rp_ratios = "0.2,0.5,0.5", rp_report = "report.json";
  std::optional<std::size_t> drop_box;
  bool sparse = false, no_temporal = false, camera_mask = false, no_timings = false;
  double rp_tau = kDefaultRefineTau;
  int rp_boxes = SceneConfig{}.num_boxes;
  rp->add_option("--scene", rp_scene, "Scene directory (default: generate from --seed)");
  rp->add_option("--boxes", rp_boxes, "Boxes when generating a scene")->capture_default_str();
  rp->add_option("--mode", rp_mode, "Prediction source")
      ->check(CLI::IsMember({"oracle", "stand-in"}))
      ->capture_default_str();
  rp->add_flag("--sparse", sparse, "Use the sparse cascade");
  rp->add_option("--ratios", rp_ratios, "Keep ratios for --sparse")->capture_default_str();
  rp->add_option("--drop-box", drop_box, "Leave one current-frame box out of refinement");
  rp->add_flag("--no-temporal", no_temporal, "Skip history alignment and fusion");
  rp->add_flag("--camera-mask", camera_mask, "Evaluate camera-visible voxels only");
  rp->add_option("--tau", rp_tau, "Refine score threshold")->capture_default_str();
  rp->add_option("--report", rp_report, "Report file name")->capture_default_str();
  rp->add_flag("--no-timings", no_timings, "Omit wall-clock timings from the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", {{"code", "usage"}, {"message", e.what()}}}}.dump() << "\n";
    return kExitUsage;
  }

  const Profile profile = g.parsed_profile();
  if (gen->parsed()) {
    cfg.profile = profile;
    const SyntheticScene scene = gen_scene(g.seed, cfg);
    write_scene(scene, g.out_dir);
    print({{"command", "gen-scene"},
           {"out_dir", g.out_dir},
           {"seed", g.seed},
           {"profile", profile_name(profile)},
           {"frames", scene.clouds.size()},
           {"points", scene.clouds.back().size()},
           {"instances", scene.gt_instance.max_id()}});
  } else if (vox->parsed()) {
    const VoxelGridSpec spec = load_spec(vox_spec, g);
    const SemanticGrid grid =
        voxelize_majority(io::decode_ppts(io::read_file(vox_in), vox_classes), spec);
    const fs::path out = g.out(vox_out);
    ensure_parent(out);
    io::write_file(out, io::encode_pvox(grid));
    std::size_t labeled = 0;
    for (std::uint16_t l : grid.labels()) labeled += l != 0;
    print({{"command", "voxelize"}, {"out", out.string()}, {"labeled_cells", labeled}});
  } else if (align->parsed()) {
    const DenseVolume hist = io::decode_dense(io::read_file(align_in));
    Pose pose = Pose::identity();
    try {
      pose = io::pose_from_json(json::parse(io::read_text(align_pose)));
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, std::string("malformed pose file: ") + e.what());
    }
    const fs::path out = g.out(align_out);
    ensure_parent(out);
    io::write_file(out, io::encode_pvox(align_volume(hist, pose)));
    print({{"command", "align"}, {"out", out.string()}});
  } else if (sp->parsed()) {
    const DenseVolume vol = io::decode_dense(io::read_file(sp_in));
    std::vector<UpsampleStage> stages;
    if (sp_factors.empty()) {
      stages = profile_grids(profile).stages;
    } else {
      for (const auto& f : parse_factors(sp_factors)) stages.push_back({f});
    }
    for (UpsampleStage& s : stages) {
      if (sp_map == "copy") s.map = CopyParent{};
      else s.map = TrilinearUpsample{};
    }
    const std::vector<double> ratios = parse_ratios(sp_ratios);
    const SparseCascade c = sparse_coarse_to_fine(vol, stages, ratios, feature_norm_score);
    const fs::path out = g.out(sp_out);
    ensure_parent(out);
    io::write_file(out, io::encode_pvox(densify(c.volume)));
    if (!sp_mask.empty()) {
      std::vector<std::uint8_t> bits(c.volume.spec().cell_count(), 0);
      for (const Index3& i : c.volume.coords()) bits[c.volume.spec().linear(i)] = 1;
      const fs::path mask = g.out(sp_mask);
      ensure_parent(mask);
      io::write_file(mask, io::encode_pvox(BinaryMask(c.volume.spec(), std::move(bits))));
    }
    print({{"command", "sparsify"},
           {"out", out.string()},
           {"kept", c.kept},
           {"fine_cells", c.volume.spec().cell_count()},
           {"sparsity", c.sparsity}});
  } else if (ref->parsed()) {
    const Taxonomy tax = load_taxonomy(classes_path);
    const SemanticGrid grid = io::decode_semantic(io::read_file(ref_grid));
    const std::vector<Box3D> boxes = io::decode_boxes_jsonl(io::read_text(ref_boxes));
    const SemanticGrid sem = refine_semantics(grid, boxes, tau);
    const InstanceGrid inst = assign_instances(sem, boxes, tax.thing_classes, tau, overlap);
    const fs::path out_sem = g.out(ref_sem), out_inst = g.out(ref_inst);
    ensure_parent(out_sem);
    ensure_parent(out_inst);
    io::write_file(out_sem, io::encode_pvox(sem));
    io::write_file(out_inst, io::encode_pvox(inst));
    print({{"command", "refine"},
           {"out_sem", out_sem.string()},
           {"out_inst", out_inst.string()},
           {"instances", inst.max_id()}});
  } else if (ev->parsed()) {
    const Taxonomy tax = load_taxonomy(classes_path);
    const SemanticGrid pred = io::decode_semantic(io::read_file(ev_pred));
    const SemanticGrid gt = io::decode_semantic(io::read_file(ev_gt));
    json report = {{"command", "eval"}, {"mode", ev_mode}};
    if (ev_mode == "miou") {
      std::optional<BinaryMask> mask;
      if (!ev_mask.empty()) mask = io::decode_mask(io::read_file(ev_mask));
      const MiouReport r = miou(pred, gt, mask ? &*mask : nullptr, all_classes(tax));
      json per_class = json::array();
      for (const ClassIoU& c : r.per_class) per_class.push_back({{"class", c.cls}, {"iou", c.iou}});
      report["miou"] = r.mean;
      report["class_iou"] = per_class;
      report["evaluated_cells"] = r.evaluated_cells;
    } else {
      require(!ev_pred_inst.empty() && !ev_gt_inst.empty(), ErrorCode::kInvalidArgument,
              "pq and pqd need --pred-inst and --gt-inst");
      const InstanceGrid pi = io::decode_instance(io::read_file(ev_pred_inst));
      const InstanceGrid gi = io::decode_instance(io::read_file(ev_gt_inst));
      const PanopticGrids p{pred, pi}, gg{gt, gi};
      const PQStats s = ev_mode == "pq"
                            ? panoptic_quality(p, gg, tax.thing_classes, tax.stuff_classes)
                            : panoptic_quality_dagger(p, gg, tax.thing_classes, tax.stuff_classes);
      report.update(pq_json(s));
    }
    print(report);
  } else if (lc->parsed()) {
    json suites = json::array();
    bool pass = true;
    for (const GradSuiteResult& r : run_gradient_suite(g.seed, instances)) {
      const bool ok = r.max_rel_error < 1e-4;
      pass = pass && ok;
      suites.push_back({{"name", r.name},
                        {"instances", r.instances},
                        {"max_rel_error", r.max_rel_error},
                        {"pass", ok}});
    }
    print({{"command", "loss-check"}, {"tolerance", 1e-4}, {"suites", suites}, {"pass", pass}});
    return pass ? 0 : kExitCheckFailed;
  } else if (rp->parsed()) {
    SceneConfig sc;
    sc.profile = profile;
    sc.num_boxes = rp_boxes;
    const SyntheticScene scene = rp_scene.empty() ? gen_scene(g.seed, sc) : read_scene(rp_scene);
    PipelineOptions o;
    o.mode = parse_mode(rp_mode);
    o.sparse = sparse;
    o.keep_ratios = parse_ratios(rp_ratios);
    o.drop_box = drop_box;
    o.temporal = !no_temporal;
    o.camera_mask = camera_mask;
    o.tau = rp_tau;
    const json report = run_pipeline(scene, o).to_json(!no_timings);
    const fs::path out = g.out(rp_report);
    ensure_parent(out);
    io::write_text(out, report.dump(2) + "\n");
    print(report);
  }
  return 0;
}

}  // namespace voxpan::cli

int main(int argc, char** argv) {
  try {
    return voxpan::cli::run(argc, argv);
  } catch (const voxpan::Error& e) {
    std::cerr << json{{"error",
                       {{"code", std::string(voxpan::error_code_name(e.code()))},
                        {"message", e.what()}}}}
                     .dump()
              << "\n";
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << "\n";
  }
  return voxpan::cli::kExitError;
}
