#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include <json.hpp>

#include "hcsbc/corpus.hpp"
#include "hcsbc/hierarchy.hpp"

namespace httplib {
class Server;
}

namespace hcsbc {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path bundle_path;
  std::size_t max_body_bytes = 8u << 20;
  std::size_t max_text_bytes = 64u << 10;
  std::size_t max_batch_rows = 10000;
  int request_timeout_ms = 30000;
  std::size_t parallelism = 4;
  std::string cors_origin = "*";

  // Throws InputError when a limit is not positive.
  void validate() const;
};

// Shared, swappable reference to the served model. Readers take a snapshot;
// swap() replaces the model for subsequent requests only.
class ModelHandle {
 public:
  struct Snapshot {
    std::shared_ptr<const PipelineModel> model;
    std::string bundle_id;
    std::uint64_t generation = 0;
  };

  Snapshot get() const;
  void swap(std::shared_ptr<const PipelineModel> model, std::string bundle_id);

 private:
  mutable std::mutex mu_;
  Snapshot current_;
};

struct ServiceResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Full pipeline for one input text: final-diagnosis extraction, first
// specimen part (or the whole text), prediction, word importance.
nlohmann::json predict_text(const PipelineModel& model, std::string_view text,
                            std::string_view bundle_id, std::string report_id = "input");

class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ModelHandle& handle() noexcept { return handle_; }
  // Loads a bundle and swaps it in. The current model stays on failure.
  void load(const std::filesystem::path& bundle_dir);

  // Transport-independent handlers.
  ServiceResponse handle_predict(std::string_view body) const;
  // Emits one NDJSON line per input record, in input order. Returns a
  // non-200 response (and emits nothing) when the request as a whole is
  // unusable.
  ServiceResponse handle_batch(std::string_view body,
                               const std::function<void(const std::string&)>& emit) const;
  // Two-phase form of handle_batch used by the HTTP route, which must know
  // the status before streaming starts.
  struct BatchJob {
    ModelHandle::Snapshot snapshot;
    std::vector<CorpusRow> rows;
  };
  ServiceResponse plan_batch(std::string_view body, BatchJob& job) const;
  void run_batch(const BatchJob& job, const std::function<void(const std::string&)>& emit) const;

  ServiceResponse handle_ontology() const;
  ServiceResponse handle_health() const;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();

 private:
  void configure_routes();

  ServiceConfig cfg_;
  ModelHandle handle_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int bound_port_ = -1;
};

}  // namespace hcsbc
