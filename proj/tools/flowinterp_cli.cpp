// flowinterp command-line tool: file-level access to the interpolation
// pipeline and its pieces.
//
// Exit codes (stable scripting contract):
//   0  success
//   2  input error (missing/unreadable/malformed file, bad command line)
//   3  raster dimension mismatch
//   4  parameter error (t outside [0,1], bad config value, bad weights)
//
// Option precedence everywhere: explicit flag > --config file > built-in
// default. The config file is plain key=value with '#' comments; keys mirror
// the PipelineConfig fields (alpha, gamma1, gamma2, occl_alpha1, occl_alpha2,
// hole_eps, fusion_eps, tau).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowinterp/flowinterp.hpp"

namespace fs = std::filesystem;
using namespace flowinterp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitShape = 3;
constexpr int kExitParam = 4;

std::string read_text(const fs::path& path) {
  std::vector<std::uint8_t> bytes = detail::read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string line = eol == std::string::npos
                           ? text.substr(pos)
                           : text.substr(pos, eol - pos);
    pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (std::size_t hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!line.empty() && is_space(line.front())) line.erase(line.begin());
    while (!line.empty() && is_space(line.back())) line.pop_back();
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParamError("config line " + std::to_string(line_no) +
                       ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    while (!key.empty() && is_space(key.back())) key.pop_back();
    while (!val.empty() && is_space(val.front())) val.erase(val.begin());
    float parsed = 0.0f;
    try {
      std::size_t used = 0;
      parsed = std::stof(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw ParamError("config line " + std::to_string(line_no) +
                       ": expected a number for '" + key + "', got '" + val +
                       "'");
    }
    if (key == "alpha") cfg.alpha = parsed;
    else if (key == "gamma1") cfg.gamma1 = parsed;
    else if (key == "gamma2") cfg.gamma2 = parsed;
    else if (key == "occl_alpha1") cfg.occl_alpha1 = parsed;
    else if (key == "occl_alpha2") cfg.occl_alpha2 = parsed;
    else if (key == "hole_eps") cfg.hole_eps = parsed;
    else if (key == "fusion_eps") cfg.fusion_eps = parsed;
    else if (key == "tau") cfg.tau = parsed;
    else
      throw ParamError("config line " + std::to_string(line_no) +
                       ": unknown key '" + key + "'");
  }
  return cfg;
}

PipelineConfig make_config(const std::string& config_path,
                           const std::optional<float>& alpha_flag) {
  PipelineConfig cfg;
  if (!config_path.empty()) cfg = parse_config_text(read_text(config_path));
  if (alpha_flag) cfg.alpha = *alpha_flag;
  return cfg;
}

ImageBuffer map_to_image(const ScalarMap& map, float scale = 1.0f) {
  ImageBuffer img;
  img.height = map.height;
  img.width = map.width;
  img.channels = 1;
  img.data.resize(map.data.size());
  for (std::size_t i = 0; i < map.data.size(); ++i)
    img.data[i] = map.data[i] * scale;
  return img;
}

long count_nonzero(const ScalarMap& map) {
  long n = 0;
  for (float v : map.data) n += v != 0.0f;
  return n;
}

std::string format_t(float t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", static_cast<double>(t));
  return buf;
}

std::vector<float> parse_t_list(const std::string& list) {
  std::vector<float> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    std::string item = comma == std::string::npos
                           ? list.substr(pos)
                           : list.substr(pos, comma - pos);
    pos = comma == std::string::npos ? list.size() + 1 : comma + 1;
    if (item.empty()) continue;
    float t = 0.0f;
    try {
      std::size_t used = 0;
      t = std::stof(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParamError("--t-list: expected a number, got '" + item + "'");
    }
    if (!(t >= 0.0f && t <= 1.0f))
      throw ParamError("--t-list: t must be in [0, 1], got '" + item + "'");
    out.push_back(t);
  }
  if (out.empty()) throw ParamError("--t-list: no time steps given");
  return out;
}

struct InterpolateArgs {
  std::string frame0, frame1, flow01, flow10, out_frame;
  std::string out_flow_t0, out_flow_t1, out_conf_t0, out_conf_t1, config;
  std::optional<float> alpha;
  float t = 0.0f;
};

int cmd_interpolate(const InterpolateArgs& a) {
  PipelineConfig cfg = make_config(a.config, a.alpha);
  ImageBuffer i0 = load_image(a.frame0);
  ImageBuffer i1 = load_image(a.frame1);
  FlowField v01 = load_flo(a.flow01);
  FlowField v10 = load_flo(a.flow10);
  InterpolationOutput out = interpolate(i0, i1, v01, v10, a.t, cfg);
  save_image(a.out_frame, out.frame_t);
  if (!a.out_flow_t0.empty()) save_flo(a.out_flow_t0, out.flow_t0);
  if (!a.out_flow_t1.empty()) save_flo(a.out_flow_t1, out.flow_t1);
  if (!a.out_conf_t0.empty())
    save_image(a.out_conf_t0, map_to_image(out.conf_t0));
  if (!a.out_conf_t1.empty())
    save_image(a.out_conf_t1, map_to_image(out.conf_t1));
  std::printf("t=%g holes_t0=%ld holes_t1=%ld\n", static_cast<double>(a.t),
              count_nonzero(out.holes_t0), count_nonzero(out.holes_t1));
  return kExitOk;
}

struct WarpArgs {
  std::string mode = "backward";
  std::string image, flow, out, weights, config;
  std::optional<float> alpha;
  float weight_scale = 1.0f;
};

int cmd_warp(const WarpArgs& a) {
  PipelineConfig cfg = make_config(a.config, a.alpha);
  ImageBuffer img = load_image(a.image);
  FlowField flow = load_flo(a.flow);
  if (a.mode == "backward") {
    save_image(a.out, backward_warp(img, flow));
    return kExitOk;
  }
  ScalarMap weight;
  weight.kind = MapKind::weight;
  weight.height = img.height;
  weight.width = img.width;
  if (a.weights.empty()) {
    weight.data.assign(static_cast<std::size_t>(img.height) * img.width, 0.0f);
  } else {
    ImageBuffer w = load_image(a.weights);
    if (w.channels != 1)
      throw IoError("--weights must be a grayscale image");
    detail::require_same_size(img.height, img.width, w.height, w.width,
                              "warp image vs weights");
    weight.data = w.data;
    for (float& v : weight.data) v *= a.weight_scale;
  }
  SplatResult<ImageBuffer> res = softmax_splat(img, flow, weight, cfg);
  save_image(a.out, res.values);
  std::printf("holes=%ld\n", count_nonzero(res.holes));
  return kExitOk;
}

struct FlowPairArgs {
  std::string flow_fwd, flow_bwd, out, out_mask, config;
  std::optional<float> alpha;
};

int cmd_confidence(const FlowPairArgs& a) {
  PipelineConfig cfg = make_config(a.config, a.alpha);
  FlowField fwd = load_flo(a.flow_fwd);
  FlowField bwd = load_flo(a.flow_bwd);
  save_image(a.out, map_to_image(confidence_map(fwd, bwd, cfg)));
  return kExitOk;
}

int cmd_occlusion(const FlowPairArgs& a) {
  PipelineConfig cfg = make_config(a.config, a.alpha);
  FlowField fwd = load_flo(a.flow_fwd);
  FlowField bwd = load_flo(a.flow_bwd);
  ScalarMap occ = occlusion_map(fwd, bwd, cfg);
  save_image(a.out, map_to_image(occ));
  if (!a.out_mask.empty()) {
    ScalarMap mask = occlusion_weight_mask(occ, fwd, cfg);
    save_image(a.out_mask, map_to_image(mask, 1.0f / cfg.alpha));
  }
  return kExitOk;
}

struct FlowVizArgs {
  std::string flow, out;
  float max_norm = 0.0f;
};

int cmd_flowviz(const FlowVizArgs& a) {
  save_image(a.out, flow_to_color(load_flo(a.flow), a.max_norm));
  return kExitOk;
}

struct MetricsArgs {
  std::string ref, test, flow_ref, flow_test;
};

int cmd_metrics(const MetricsArgs& a) {
  ImageBuffer ref = load_image(a.ref);
  ImageBuffer test = load_image(a.test);
  MetricReport report = metric_report(ref, test);
  if (a.flow_ref.empty() != a.flow_test.empty())
    throw ParamError("--flow-ref and --flow-test must be given together");
  if (!a.flow_ref.empty()) {
    FlowField fr = load_flo(a.flow_ref);
    FlowField ft = load_flo(a.flow_test);
    FlowErrorStats stats = endpoint_error(ft, fr);
    std::printf("psnr=%.4f ssim=%.4f epe=%.4f fl_all=%.4f\n", report.psnr,
                report.ssim, stats.epe, stats.fl_all);
  } else {
    std::printf("psnr=%.4f ssim=%.4f\n", report.psnr, report.ssim);
  }
  return kExitOk;
}

struct SynthArgs {
  std::string scene, t_list, out_dir;
};

int cmd_synth(const SynthArgs& a) {
  std::vector<float> ts = parse_t_list(a.t_list);
  SyntheticScene scene = parse_scene(read_text(a.scene));
  fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create output directory '" + a.out_dir +
                  "': " + ec.message());
  long files = 0;
  save_flo(dir / "flow01.flo", ground_truth_flow(scene, 0.0f, 1.0f));
  save_flo(dir / "flow10.flo", ground_truth_flow(scene, 1.0f, 0.0f));
  save_image(dir / "occ01.png",
             map_to_image(ground_truth_occlusion(scene, 0.0f, 1.0f)));
  save_image(dir / "occ10.png",
             map_to_image(ground_truth_occlusion(scene, 1.0f, 0.0f)));
  files += 4;
  for (float t : ts) {
    const std::string tag = format_t(t);
    save_image(dir / ("frame_" + tag + ".png"), render(scene, t));
    save_flo(dir / ("gtflow_t0_" + tag + ".flo"),
             ground_truth_flow(scene, t, 0.0f));
    save_flo(dir / ("gtflow_t1_" + tag + ".flo"),
             ground_truth_flow(scene, t, 1.0f));
    files += 3;
  }
  std::printf("wrote %ld files to %s\n", files, dir.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occlusion-aware forward-warping frame interpolation"};
  app.require_subcommand(1);

  InterpolateArgs ia;
  float ia_alpha = 0.0f;
  CLI::App* interp = app.add_subcommand(
      "interpolate", "Synthesize the frame at time t from two frames + flows");
  interp->add_option("--frame0", ia.frame0, "first frame (PNG/PPM/PGM)")
      ->required();
  interp->add_option("--frame1", ia.frame1, "second frame")->required();
  interp->add_option("--flow01", ia.flow01, "flow frame0 -> frame1 (.flo)")
      ->required();
  interp->add_option("--flow10", ia.flow10, "flow frame1 -> frame0 (.flo)")
      ->required();
  interp->add_option("--t", ia.t, "time step in [0, 1]")->required();
  interp->add_option("--out-frame", ia.out_frame, "output frame path")
      ->required();
  interp->add_option("--out-flow-t0", ia.out_flow_t0, "write flow t->0 (.flo)");
  interp->add_option("--out-flow-t1", ia.out_flow_t1, "write flow t->1 (.flo)");
  interp->add_option("--out-conf-t0", ia.out_conf_t0,
                     "write confidence toward frame0 (grayscale)");
  interp->add_option("--out-conf-t1", ia.out_conf_t1,
                     "write confidence toward frame1 (grayscale)");
  interp->add_option("--config", ia.config, "key=value config file");
  CLI::Option* ia_alpha_opt =
      interp->add_option("--alpha", ia_alpha, "occlusion weighting strength");

  WarpArgs wa;
  float wa_alpha = 0.0f;
  CLI::App* warp = app.add_subcommand("warp", "Warp an image along a flow");
  warp->add_option("--mode", wa.mode, "backward or forward")
      ->check(CLI::IsMember({"backward", "forward"}));
  warp->add_option("--image", wa.image, "source image")->required();
  warp->add_option("--flow", wa.flow, "flow field (.flo)")->required();
  warp->add_option("--out", wa.out, "output image")->required();
  warp->add_option("--weights", wa.weights,
                   "forward mode: grayscale weight image in [0, 1]");
  warp->add_option("--weight-scale", wa.weight_scale,
                   "forward mode: multiply weights by this");
  warp->add_option("--config", wa.config, "key=value config file");
  CLI::Option* wa_alpha_opt =
      warp->add_option("--alpha", wa_alpha, "occlusion weighting strength");

  FlowPairArgs ca;
  float ca_alpha = 0.0f;
  CLI::App* conf = app.add_subcommand(
      "confidence", "Forward-backward consistency confidence map");
  conf->add_option("--flow-fwd", ca.flow_fwd, "forward flow (.flo)")
      ->required();
  conf->add_option("--flow-bwd", ca.flow_bwd, "backward flow (.flo)")
      ->required();
  conf->add_option("--out", ca.out, "output grayscale image")->required();
  conf->add_option("--config", ca.config, "key=value config file");
  CLI::Option* ca_alpha_opt =
      conf->add_option("--alpha", ca_alpha, "occlusion weighting strength");

  FlowPairArgs oa;
  float oa_alpha = 0.0f;
  CLI::App* occl = app.add_subcommand(
      "occlusion", "Binary occlusion map from a forward/backward flow pair");
  occl->add_option("--flow-fwd", oa.flow_fwd, "forward flow (.flo)")
      ->required();
  occl->add_option("--flow-bwd", oa.flow_bwd, "backward flow (.flo)")
      ->required();
  occl->add_option("--out", oa.out, "output binary grayscale image")
      ->required();
  occl->add_option("--out-mask", oa.out_mask,
                   "also write the splat weight mask, scaled to [0, 1]");
  occl->add_option("--config", oa.config, "key=value config file");
  CLI::Option* oa_alpha_opt =
      occl->add_option("--alpha", oa_alpha, "occlusion weighting strength");

  FlowVizArgs va;
  CLI::App* viz = app.add_subcommand("flowviz", "Color-wheel flow rendering");
  viz->add_option("--flow", va.flow, "flow field (.flo)")->required();
  viz->add_option("--out", va.out, "output RGB image")->required();
  viz->add_option("--max-norm", va.max_norm,
                  "fixed normalization magnitude (default: field maximum)");

  MetricsArgs ma;
  CLI::App* metrics =
      app.add_subcommand("metrics", "PSNR/SSIM between two images, "
                                    "optionally epe/fl_all between two flows");
  metrics->add_option("--ref", ma.ref, "reference image")->required();
  metrics->add_option("--test", ma.test, "test image")->required();
  metrics->add_option("--flow-ref", ma.flow_ref, "reference flow (.flo)");
  metrics->add_option("--flow-test", ma.flow_test, "test flow (.flo)");

  SynthArgs sa;
  CLI::App* synth = app.add_subcommand(
      "synth", "Render a synthetic scene: frames, exact flows, occlusion");
  synth->add_option("--scene", sa.scene, "scene description file")->required();
  synth->add_option("--t-list", sa.t_list, "comma-separated time steps")
      ->required();
  synth->add_option("--out-dir", sa.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (*interp) {
      if (*ia_alpha_opt) ia.alpha = ia_alpha;
      return cmd_interpolate(ia);
    }
    if (*warp) {
      if (*wa_alpha_opt) wa.alpha = wa_alpha;
      return cmd_warp(wa);
    }
    if (*conf) {
      if (*ca_alpha_opt) ca.alpha = ca_alpha;
      return cmd_confidence(ca);
    }
    if (*occl) {
      if (*oa_alpha_opt) oa.alpha = oa_alpha;
      return cmd_occlusion(oa);
    }
    if (*viz) return cmd_flowviz(va);
    if (*metrics) return cmd_metrics(ma);
    if (*synth) return cmd_synth(sa);
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitShape;
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParam;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
