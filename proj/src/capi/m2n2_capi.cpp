#include "m2n2/m2n2.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "error.hpp"
#include "evaluator.hpp"
#include "png_io.hpp"
#include "segmenter.hpp"
#include "synth.hpp"
#include "tensor_io.hpp"

struct m2n2_bundle {
  std::shared_ptr<const m2n2::PreparedBundle> prepared;
  std::vector<std::string> gt_ids;
  std::string meta_json;
};

struct m2n2_session {
  std::shared_ptr<const m2n2::PreparedBundle> prepared;
  std::unique_ptr<m2n2::Session> session;
};

struct m2n2_report {
  m2n2::BenchReport report;
  std::string json;
  std::string csv;
};

namespace {

thread_local std::string g_last_error;

m2n2_status record(m2n2_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs fn, translating exceptions into status codes.
template <class Fn>
m2n2_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const m2n2::Error& e) {
    return record(static_cast<m2n2_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(M2N2_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(M2N2_INTERNAL, e.what());
  }
}

m2n2_status null_arg(const char* name) { return record(M2N2_INVALID_ARGUMENT, std::string(name) + " is null"); }

m2n2::PipelineConfig to_config(const m2n2_options* opts) {
  m2n2::PipelineConfig cfg;
  if (!opts) return cfg;
  cfg.adaptive.use_adaptive = opts->use_adaptive != 0;
  if (!opts->use_depth_fill) cfg.fill.depth_weight = 0.0;
  if (!(opts->temperature > 0.0)) m2n2::fail(m2n2::ErrorCode::InvalidArgument, "temperature must be positive");
  if (!(opts->sigma_adaptive > 0.0)) m2n2::fail(m2n2::ErrorCode::InvalidArgument, "sigma_adaptive must be positive");
  cfg.temperature = opts->temperature;
  cfg.adaptive.sigma_adaptive = opts->sigma_adaptive;
  return cfg;
}

void fill_info(const m2n2::Session& s, m2n2_click_info* info) {
  if (!info) return;
  *info = m2n2_click_info{};
  info->area = s.current().area();
  if (s.clicks().empty()) return;
  const m2n2::ClickResult& c = s.clicks().back();
  info->fallback_used = c.fallback_used ? 1 : 0;
  info->pass2_triggered = c.pass2_triggered ? 1 : 0;
  info->constraint_residual = c.constraint_residual ? 1 : 0;
  info->area_delta = c.area_delta;
  info->limit = c.limit;
  info->lambda = c.newest_lambda;
}

m2n2::Grid<std::uint8_t> mask_image(const m2n2::Segmentation& seg) {
  m2n2::Grid<std::uint8_t> img(seg.dims(), 1, 0);
  for (std::size_t i = 0; i < seg.dims().size(); ++i) img[i] = seg.at(i) ? 255 : 0;
  return img;
}

m2n2::Segmentation read_mask(const char* path) {
  const auto img = m2n2::read_png(path, 1);
  m2n2::Segmentation seg(img.dims());
  for (std::size_t i = 0; i < img.dims().size(); ++i) seg.set(i, img[i] != 0);
  return seg;
}

}  // namespace

extern "C" {

const char* m2n2_version(void) { return "0.1.0"; }

const char* m2n2_last_error(void) { return g_last_error.c_str(); }

const char* m2n2_status_name(int status) {
  if (status == M2N2_BUFFER_TOO_SMALL) return "BufferTooSmall";
  return m2n2::error_name(static_cast<m2n2::ErrorCode>(status));
}

void m2n2_options_default(m2n2_options* opts) {
  if (!opts) return;
  const m2n2::PipelineConfig cfg;
  opts->use_adaptive = cfg.adaptive.use_adaptive ? 1 : 0;
  opts->use_depth_fill = 1;
  opts->temperature = cfg.temperature;
  opts->sigma_adaptive = cfg.adaptive.sigma_adaptive;
}

void m2n2_bench_options_default(m2n2_bench_options* opts) {
  if (!opts) return;
  opts->strategy = "center";
  opts->max_clicks = m2n2::kDefaultMaxClicks;
  opts->seed = 0;
  opts->threads = 1;
}

m2n2_status m2n2_bundle_open(const char* dir, const m2n2_options* opts, m2n2_bundle** out) {
  if (!dir) return null_arg("dir");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto loaded = std::make_shared<m2n2::ImageBundle>(m2n2::load_bundle(dir));
    auto handle = std::make_unique<m2n2_bundle>();
    handle->prepared = m2n2::prepare_bundle(loaded, to_config(opts));
    for (const auto& [id, gt] : loaded->ground_truth) handle->gt_ids.push_back(id);
    const auto& meta = loaded->meta;
    const nlohmann::json cfg = m2n2::to_json(handle->prepared->config);
    const nlohmann::json j = {{"id", loaded->id},
                              {"height", loaded->dims().height},
                              {"width", loaded->dims().width},
                              {"orig_height", meta.original.height},
                              {"orig_width", meta.original.width},
                              {"coarse_height", meta.coarse.height},
                              {"coarse_width", meta.coarse.width},
                              {"attention_backbone", meta.attention_backbone},
                              {"depth_backbone", meta.depth_backbone},
                              {"tta", meta.tta},
                              {"gt_ids", handle->gt_ids},
                              {"ipf_iterations", handle->prepared->ipf_iterations},
                              {"config_fingerprint", m2n2::fingerprint(cfg)}};
    handle->meta_json = j.dump();
    *out = handle.release();
    return M2N2_OK;
  });
}

void m2n2_bundle_free(m2n2_bundle* bundle) { delete bundle; }

const char* m2n2_bundle_id(const m2n2_bundle* bundle) {
  return bundle ? bundle->prepared->bundle->id.c_str() : nullptr;
}

m2n2_status m2n2_bundle_dims(const m2n2_bundle* bundle, int* height, int* width) {
  if (!bundle) return null_arg("bundle");
  const m2n2::Dims d = bundle->prepared->dims();
  if (height) *height = d.height;
  if (width) *width = d.width;
  return M2N2_OK;
}

m2n2_status m2n2_bundle_original_dims(const m2n2_bundle* bundle, int* height, int* width) {
  if (!bundle) return null_arg("bundle");
  const m2n2::Dims d = bundle->prepared->bundle->meta.original;
  if (height) *height = d.height;
  if (width) *width = d.width;
  return M2N2_OK;
}

size_t m2n2_bundle_gt_count(const m2n2_bundle* bundle) { return bundle ? bundle->gt_ids.size() : 0; }

const char* m2n2_bundle_gt_id(const m2n2_bundle* bundle, size_t index) {
  if (!bundle || index >= bundle->gt_ids.size()) return nullptr;
  return bundle->gt_ids[index].c_str();
}

const char* m2n2_bundle_meta_json(const m2n2_bundle* bundle) { return bundle ? bundle->meta_json.c_str() : nullptr; }

m2n2_status m2n2_session_new(m2n2_bundle* bundle, m2n2_session** out) {
  if (!bundle) return null_arg("bundle");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<m2n2_session>();
    handle->prepared = bundle->prepared;
    handle->session = std::make_unique<m2n2::Session>(bundle->prepared);
    *out = handle.release();
    return M2N2_OK;
  });
}

void m2n2_session_free(m2n2_session* session) { delete session; }

m2n2_status m2n2_session_add_click(m2n2_session* session, int x, int y, int label, m2n2_click_info* info) {
  if (!session) return null_arg("session");
  return guarded([&] {
    session->session->add_prompt(m2n2::PromptPoint{x, y, label});
    fill_info(*session->session, info);
    return M2N2_OK;
  });
}

m2n2_status m2n2_session_undo(m2n2_session* session, m2n2_click_info* info) {
  if (!session) return null_arg("session");
  return guarded([&] {
    session->session->undo();
    fill_info(*session->session, info);
    return M2N2_OK;
  });
}

size_t m2n2_session_click_count(const m2n2_session* session) {
  return session ? session->session->points().size() : 0;
}

uint64_t m2n2_session_area(const m2n2_session* session) { return session ? session->session->current().area() : 0; }

m2n2_status m2n2_session_mask(const m2n2_session* session, uint8_t* buffer, size_t size) {
  if (!session) return null_arg("session");
  if (!buffer) return null_arg("buffer");
  const auto& mask = session->session->current();
  if (size < mask.dims().size()) return record(M2N2_BUFFER_TOO_SMALL, "mask buffer smaller than H*W");
  std::memcpy(buffer, mask.grid().values().data(), mask.dims().size());
  return M2N2_OK;
}

m2n2_status m2n2_session_mask_rle(const m2n2_session* session, uint32_t* runs, size_t capacity, size_t* count) {
  if (!session) return null_arg("session");
  if (!count) return null_arg("count");
  return guarded([&] {
    const auto rle = m2n2::rle_encode(session->session->current());
    *count = rle.size();
    if (capacity < rle.size() || (!runs && !rle.empty()))
      return record(M2N2_BUFFER_TOO_SMALL, "run buffer too small");
    if (!rle.empty()) std::memcpy(runs, rle.data(), rle.size() * sizeof(uint32_t));
    return M2N2_OK;
  });
}

m2n2_status m2n2_session_mask_png(const m2n2_session* session, const char* path) {
  if (!session) return null_arg("session");
  if (!path) return null_arg("path");
  return guarded([&] {
    m2n2::write_png(path, mask_image(session->session->current()));
    return M2N2_OK;
  });
}

m2n2_status m2n2_session_mask_png_bytes(const m2n2_session* session, uint8_t** data, size_t* size) {
  if (!session) return null_arg("session");
  if (!data || !size) return null_arg("data");
  *data = nullptr;
  *size = 0;
  return guarded([&] {
    const std::string png = m2n2::encode_png(mask_image(session->session->current()));
    auto* buf = static_cast<uint8_t*>(std::malloc(png.size()));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, png.data(), png.size());
    *data = buf;
    *size = png.size();
    return M2N2_OK;
  });
}

m2n2_status m2n2_session_iou(const m2n2_session* session, const char* gt_id, double* out) {
  if (!session) return null_arg("session");
  if (!gt_id) return null_arg("gt_id");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto& gts = session->prepared->bundle->ground_truth;
    const auto it = gts.find(gt_id);
    if (it == gts.end()) return record(M2N2_MISSING_FILE, std::string("no ground truth named ") + gt_id);
    const auto pred = m2n2::resample_nearest(session->session->current(), it->second.dims());
    *out = m2n2::iou(pred, it->second);
    return M2N2_OK;
  });
}

void m2n2_buffer_free(void* data) { std::free(data); }

m2n2_status m2n2_mask_iou_files(const char* pred_png, const char* gt_png, double* out) {
  if (!pred_png || !gt_png) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto gt = read_mask(gt_png);
    *out = m2n2::iou(m2n2::resample_nearest(read_mask(pred_png), gt.dims()), gt);
    return M2N2_OK;
  });
}

m2n2_status m2n2_benchmark_run(const char* dataset_dir, const m2n2_options* opts, const m2n2_bench_options* bench,
                               m2n2_report** out) {
  if (!dataset_dir) return null_arg("dataset_dir");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    m2n2_bench_options b;
    m2n2_bench_options_default(&b);
    if (bench) b = *bench;
    m2n2::BenchmarkOptions bo;
    bo.pipeline = to_config(opts);
    bo.simulate.strategy = m2n2::parse_strategy(b.strategy ? b.strategy : "center");
    if (b.max_clicks < 1) return record(M2N2_INVALID_ARGUMENT, "max_clicks must be at least 1");
    bo.simulate.max_clicks = b.max_clicks;
    bo.simulate.seed = b.seed;
    bo.threads = b.threads < 1 ? 1 : b.threads;
    auto handle = std::make_unique<m2n2_report>();
    handle->report = m2n2::run_benchmark(dataset_dir, bo);
    handle->json = m2n2::report_to_json(handle->report).dump(2);
    handle->csv = m2n2::report_to_csv(handle->report);
    *out = handle.release();
    return M2N2_OK;
  });
}

void m2n2_report_free(m2n2_report* report) { delete report; }

double m2n2_report_noc90(const m2n2_report* report) {
  return report ? report->report.noc90 : std::numeric_limits<double>::quiet_NaN();
}

double m2n2_report_noc95(const m2n2_report* report) {
  return report ? report->report.noc95 : std::numeric_limits<double>::quiet_NaN();
}

double m2n2_report_miou_at(const m2n2_report* report, int n) {
  if (!report) return std::numeric_limits<double>::quiet_NaN();
  const auto it = report->report.miou_at.find(n);
  return it == report->report.miou_at.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

size_t m2n2_report_failure_count(const m2n2_report* report) { return report ? report->report.failures.size() : 0; }

const char* m2n2_report_json(const m2n2_report* report) { return report ? report->json.c_str() : nullptr; }

const char* m2n2_report_csv(const m2n2_report* report) { return report ? report->csv.c_str() : nullptr; }

m2n2_status m2n2_synth_write_suite(const char* dir, const char* kind, int count, uint64_t seed) {
  if (!dir) return null_arg("dir");
  if (!kind) return null_arg("kind");
  if (count < 0) return record(M2N2_INVALID_ARGUMENT, "count must be non-negative");
  return guarded([&] {
    m2n2::write_suite(dir, kind, count, seed);
    return M2N2_OK;
  });
}

}  // extern "C"
