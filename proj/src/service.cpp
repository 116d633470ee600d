#include "hcsbc/service.hpp"

#include <httplib.h>

#include "hcsbc/bundle.hpp"
#include "hcsbc/errors.hpp"
#include "hcsbc/segmenter.hpp"

namespace hcsbc {

using nlohmann::json;

void ServiceConfig::validate() const {
  if (max_body_bytes == 0 || max_text_bytes == 0 || max_batch_rows == 0 || parallelism == 0 ||
      request_timeout_ms <= 0) {
    throw InputError("service: limits must be positive");
  }
  if (port < 0 || port > 65535) throw InputError("service: port out of range");
}

ModelHandle::Snapshot ModelHandle::get() const {
  std::lock_guard lock(mu_);
  return current_;
}

void ModelHandle::swap(std::shared_ptr<const PipelineModel> model, std::string bundle_id) {
  std::lock_guard lock(mu_);
  current_.model = std::move(model);
  current_.bundle_id = std::move(bundle_id);
  ++current_.generation;
}

json predict_text(const PipelineModel& model, std::string_view text, std::string_view bundle_id,
                  std::string report_id) {
  RawReport raw{report_id, std::string(text), std::nullopt};
  const SectionResult section = extract_final_diagnosis(raw);
  const auto parts = split_parts(section.report, MarkerStyleSet::all());
  const SpecimenPart& part = parts.at(0);
  const Prediction pred = model.predict(part);
  const auto imp = word_importance(model, part, pred);

  const Ontology& ont = model.ontology();
  json sev = json::array();
  for (const auto& s : pred.severities) {
    sev.push_back({{"label", s.code},
                   {"name", ont.has_severity(s.code) ? ont.severity(s.code).display_name : s.code},
                   {"probability", s.probability}});
  }
  json diag = json::array();
  for (const auto& d : pred.diagnoses) {
    diag.push_back({{"label", d.label}, {"probability", d.probability}, {"severity", d.severity}});
  }
  json importances = json::array();
  for (const auto& t : imp) {
    importances.push_back({{"token", t.token}, {"surface", t.surface}, {"score", t.score}});
  }
  return {{"input", std::string(text)},
          {"report_id", report_id},
          {"part_id", part.part_id},
          {"n_parts", parts.size()},
          {"part_text", part.text},
          {"severities", sev},
          {"diagnoses", diag},
          {"no_prediction", pred.no_prediction},
          {"importances", importances},
          {"model", {{"kind", model.kind()},
                     {"bundle_version", std::string(bundle_id)},
                     {"engine_version", std::string(kEngineVersion)},
                     {"ontology_checksum", ont.checksum()}}}};
}

namespace {

ServiceResponse error_response(int status, const std::string& msg) {
  return {status, json{{"error", msg}, {"status", status}}.dump()};
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

}  // namespace

Service::Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (!cfg_.bundle_path.empty()) load(cfg_.bundle_path);
}

Service::~Service() { stop(); }

void Service::load(const std::filesystem::path& bundle_dir) {
  auto b = load_bundle(bundle_dir);
  handle_.swap(std::move(b.model), b.bundle_id);
}

ServiceResponse Service::handle_predict(std::string_view body) const {
  const auto snap = handle_.get();
  if (!snap.model) return error_response(503, "no model loaded");
  if (body.size() > cfg_.max_body_bytes) return error_response(413, "request body too large");
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object() || !req.contains("text") || !req["text"].is_string()) {
    return error_response(400, "request must be an object with a string 'text'");
  }
  const auto text = req["text"].get<std::string>();
  if (blank(text)) return error_response(400, "'text' is empty");
  if (text.size() > cfg_.max_text_bytes) return error_response(413, "'text' exceeds the size limit");
  std::string report_id = "input";
  if (req.contains("report_id") && req["report_id"].is_string()) {
    report_id = req["report_id"].get<std::string>();
  }
  try {
    return {200, predict_text(*snap.model, text, snap.bundle_id, report_id).dump()};
  } catch (const SegmentError& e) {
    return error_response(400, e.what());
  } catch (const InputError& e) {
    return error_response(400, e.what());
  } catch (const ProviderError& e) {
    return error_response(502, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

ServiceResponse Service::plan_batch(std::string_view body, BatchJob& job) const {
  job.snapshot = handle_.get();
  if (!job.snapshot.model) return error_response(503, "no model loaded");
  if (body.size() > cfg_.max_body_bytes) return error_response(413, "request body too large");
  if (blank(body)) return error_response(400, "empty batch");
  try {
    job.rows = parse_rows(body, detect_format(body));
  } catch (const Error& e) {
    return error_response(400, e.what());
  }
  if (job.rows.empty()) return error_response(400, "batch contains no records");
  if (job.rows.size() > cfg_.max_batch_rows) {
    return error_response(413, "batch exceeds " + std::to_string(cfg_.max_batch_rows) + " rows");
  }
  return {200, "", "application/x-ndjson"};
}

void Service::run_batch(const BatchJob& job,
                        const std::function<void(const std::string&)>& emit) const {
  for (std::size_t k = 0; k < job.rows.size(); ++k) {
    const auto& row = job.rows[k];
    json rec;
    std::string err = row.error;
    if (err.empty() && row.part) {
      if (blank(row.part->text)) {
        err = "empty text";
      } else if (row.part->text.size() > cfg_.max_text_bytes) {
        err = "text exceeds the size limit";
      } else {
        try {
          rec = predict_text(*job.snapshot.model, row.part->text, job.snapshot.bundle_id,
                             row.part->report_id);
        } catch (const std::exception& e) {
          err = e.what();
        }
      }
    }
    if (!err.empty()) {
      rec = {{"error", err}};
      if (row.part) rec["report_id"] = row.part->report_id;
    }
    rec["row"] = k + 1;
    rec["line"] = row.line;
    if (row.part) rec["source_part_id"] = row.part->part_id;
    emit(rec.dump() + "\n");
  }
}

ServiceResponse Service::handle_batch(std::string_view body,
                                      const std::function<void(const std::string&)>& emit) const {
  BatchJob job;
  auto res = plan_batch(body, job);
  if (res.status == 200) run_batch(job, emit);
  return res;
}

ServiceResponse Service::handle_ontology() const {
  const auto snap = handle_.get();
  if (!snap.model) return error_response(503, "no model loaded");
  const Ontology& ont = snap.model->ontology();
  json doc = json::parse(ont.serialize());
  doc["checksum"] = ont.checksum();
  return {200, doc.dump()};
}

ServiceResponse Service::handle_health() const {
  const auto snap = handle_.get();
  json j = {{"status", "ok"},
            {"model_loaded", bool(snap.model)},
            {"engine_version", std::string(kEngineVersion)}};
  if (snap.model) {
    j["bundle_version"] = snap.bundle_id;
    j["kind"] = snap.model->kind();
    j["generation"] = snap.generation;
  }
  return {200, j.dump()};
}

void Service::configure_routes() {
  server_ = std::make_unique<httplib::Server>();
  auto& svr = *server_;
  const std::size_t threads = cfg_.parallelism;
  svr.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  svr.set_payload_max_length(cfg_.max_body_bytes);
  const auto secs = cfg_.request_timeout_ms / 1000, usecs = (cfg_.request_timeout_ms % 1000) * 1000;
  svr.set_read_timeout(secs, usecs);
  svr.set_write_timeout(secs, usecs);
  svr.set_default_headers({{"Access-Control-Allow-Origin", cfg_.cors_origin},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});

  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  svr.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  svr.Post("/api/predict", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_predict(req.body));
  });
  svr.Post("/api/batch", [this, reply](const httplib::Request& req, httplib::Response& res) {
    auto job = std::make_shared<BatchJob>();
    auto r = plan_batch(req.body, *job);
    if (r.status != 200) return reply(res, r);
    res.status = 200;
    res.set_chunked_content_provider(
        "application/x-ndjson", [this, job](std::size_t, httplib::DataSink& sink) {
          run_batch(*job, [&](const std::string& line) { sink.write(line.data(), line.size()); });
          sink.done();
          return true;
        });
  });
  svr.Get("/api/ontology", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_ontology());
  });
  svr.Get("/healthz", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_health());
  });
  svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(json{{"error", httplib::status_message(res.status)}, {"status", res.status}}.dump(),
                      "application/json");
    }
  });
}

int Service::start() {
  if (server_) throw InputError("service already started");
  configure_routes();
  bound_port_ = cfg_.port == 0 ? server_->bind_to_any_port(cfg_.host)
                               : (server_->bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1);
  if (bound_port_ < 0) {
    server_.reset();
    throw InputError("service: cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  return bound_port_;
}

void Service::run() {
  start();
  if (thread_.joinable()) thread_.join();
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
}

}  // namespace hcsbc
