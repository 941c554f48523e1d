#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "m2n2/m2n2.h"
#include "points.hpp"
#include "service.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int report_failure(const char* what) {
  std::cerr << "error: " << what << ": " << m2n2_last_error() << "\n";
  return kExitFailure;
}

struct PipelineFlags {
  bool no_adaptive = false;
  bool no_depth = false;
  double temperature = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_flag("--no-adaptive", no_adaptive, "use the prior size gate instead of the adaptive one");
    cmd->add_flag("--no-depth", no_depth, "drop the depth term from the flood fill");
    cmd->add_option("--temperature", temperature, "attention sharpening exponent")->check(CLI::PositiveNumber);
  }

  m2n2_options options() const {
    m2n2_options o;
    m2n2_options_default(&o);
    o.use_adaptive = no_adaptive ? 0 : 1;
    o.use_depth_fill = no_depth ? 0 : 1;
    o.temperature = temperature;
    return o;
  }
};

int run_predict(const std::string& bundle_dir, const std::string& points_text, const std::string& out,
                const std::string& gt, const PipelineFlags& flags) {
  const auto points = m2n2::cli::parse_points(points_text);
  if (!points) {
    std::cerr << "error: malformed --points, expected \"x,y,label;...\" with label 0 or 1\n";
    return kExitUsage;
  }
  const m2n2_options opts = flags.options();
  m2n2_bundle* bundle = nullptr;
  if (m2n2_bundle_open(bundle_dir.c_str(), &opts, &bundle) != M2N2_OK) return report_failure("loading bundle");
  m2n2_session* session = nullptr;
  int code = 0;
  if (m2n2_session_new(bundle, &session) != M2N2_OK) {
    code = report_failure("creating session");
  } else {
    for (const auto& p : *points) {
      m2n2_click_info info{};
      if (m2n2_session_add_click(session, p.x, p.y, p.label, &info) != M2N2_OK) {
        code = report_failure("adding click");
        break;
      }
      std::printf("click %d,%d,%d area=%llu%s%s\n", p.x, p.y, p.label, static_cast<unsigned long long>(info.area),
                  info.fallback_used ? " fallback" : "", info.pass2_triggered ? " pass2" : "");
    }
    if (code == 0 && m2n2_session_mask_png(session, out.c_str()) != M2N2_OK) code = report_failure("writing mask");
    if (code == 0 && !gt.empty()) {
      double v = 0.0;
      const m2n2_status st = std::filesystem::is_regular_file(gt)
                                 ? m2n2_mask_iou_files(out.c_str(), gt.c_str(), &v)
                                 : m2n2_session_iou(session, gt.c_str(), &v);
      if (st != M2N2_OK)
        code = report_failure("computing IoU");
      else
        std::printf("iou=%.6f\n", v);
    }
  }
  m2n2_session_free(session);
  m2n2_bundle_free(bundle);
  return code;
}

int run_eval(const std::string& dataset, const std::string& strategy, int max_clicks, const std::string& report_path,
             const std::string& csv_path, std::uint64_t seed, int threads, const PipelineFlags& flags) {
  const m2n2_options opts = flags.options();
  m2n2_bench_options bench;
  m2n2_bench_options_default(&bench);
  bench.strategy = strategy.c_str();
  bench.max_clicks = max_clicks;
  bench.seed = seed;
  bench.threads = threads;
  m2n2_report* report = nullptr;
  if (m2n2_benchmark_run(dataset.c_str(), &opts, &bench, &report) != M2N2_OK) return report_failure("benchmark");
  std::ofstream(report_path) << m2n2_report_json(report) << "\n";
  if (!csv_path.empty()) std::ofstream(csv_path) << m2n2_report_csv(report);
  std::printf("noc90=%.3f noc95=%.3f miou@1=%.4f miou@5=%.4f failures=%zu\n", m2n2_report_noc90(report),
              m2n2_report_noc95(report), m2n2_report_miou_at(report, 1),
              max_clicks >= 5 ? m2n2_report_miou_at(report, 5) : m2n2_report_miou_at(report, max_clicks),
              m2n2_report_failure_count(report));
  const bool failed = m2n2_report_failure_count(report) > 0;
  m2n2_report_free(report);
  return failed ? kExitFailure : 0;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

int run_serve(std::optional<int> port, const std::string& data_dir, const PipelineFlags& flags) {
  const auto env = m2n2::service::settings_from_env();
  m2n2::service::ServiceOptions opts;
  opts.data_dir = data_dir.empty() ? env.data_dir : std::filesystem::path(data_dir);
  opts.idle_timeout = env.idle_timeout;
  opts.web_dir = env.web_dir;
  opts.pipeline = flags.options();
  m2n2::service::Service service(opts);
  const std::size_t loaded = service.load_bundles();
  std::cerr << "loaded " << loaded << " bundle(s) from " << opts.data_dir << "\n";

  httplib::Server server;
  service.install(server);
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  const int p = port.value_or(env.port);
  std::cerr << "listening on port " << p << "\n";
  if (!server.listen("0.0.0.0", p)) {
    std::cerr << "error: cannot listen on port " << p << "\n";
    return kExitFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free point-prompt segmentation"};
  app.require_subcommand(1);

  PipelineFlags predict_flags, eval_flags, serve_flags;

  std::string bundle_dir, points_text, out_path, gt;
  auto* predict = app.add_subcommand("predict", "segment one bundle from a click sequence");
  predict->add_option("--bundle", bundle_dir, "bundle directory")->required();
  predict->add_option("--points", points_text, "clicks as \"x,y,label;...\"")->required();
  predict->add_option("--out", out_path, "output mask PNG")->required();
  predict->add_option("--gt", gt, "ground-truth id in the bundle or a mask PNG");
  predict_flags.attach(predict);

  std::string dataset, strategy = "center", report_path, csv_path;
  int max_clicks = 20, threads = 1;
  std::uint64_t seed = 0;
  auto* eval = app.add_subcommand("eval", "run the click-simulation benchmark");
  eval->add_option("--dataset", dataset, "directory of bundles")->required();
  eval->add_option("--strategy", strategy, "click strategy")->check(CLI::IsMember({"center", "random"}));
  eval->add_option("--max-clicks", max_clicks, "clicks per instance")->check(CLI::PositiveNumber);
  eval->add_option("--report", report_path, "JSON report path")->required();
  eval->add_option("--csv", csv_path, "per-instance CSV path");
  eval->add_option("--seed", seed, "seed for the random strategy");
  eval->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  eval_flags.attach(eval);

  std::optional<int> port;
  std::string data_dir;
  auto* serve = app.add_subcommand("serve", "start the HTTP service (M2N2_PORT, M2N2_DATA_DIR, M2N2_SESSION_TTL)");
  serve->add_option("--port", port, "overrides M2N2_PORT");
  serve->add_option("--data-dir", data_dir, "overrides M2N2_DATA_DIR");
  serve_flags.attach(serve);

  std::string synth_out, kind = "mixed";
  int count = 50;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "write a synthetic bundle suite");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--kind", kind, "scene family")->check(CLI::IsMember({"overlap", "mixed"}));
  synth->add_option("--count", count, "number of scenes")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_seed, "suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*predict) return run_predict(bundle_dir, points_text, out_path, gt, predict_flags);
  if (*eval) return run_eval(dataset, strategy, max_clicks, report_path, csv_path, seed, threads, eval_flags);
  if (*serve) return run_serve(port, data_dir, serve_flags);
  if (m2n2_synth_write_suite(synth_out.c_str(), kind.c_str(), count, synth_seed) != M2N2_OK)
    return report_failure("writing suite");
  std::printf("wrote %d %s scene(s) to %s\n", count, kind.c_str(), synth_out.c_str());
  return 0;
}
