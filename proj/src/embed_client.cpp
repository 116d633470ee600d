#include <cmath>
#include <future>

#include <httplib.h>

#include "hcsbc/errors.hpp"
#include "hcsbc/features.hpp"

namespace hcsbc {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string base;    // scheme://host[:port]
  std::string prefix;  // path prefix, no trailing slash
};

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw ProviderError("embed: endpoint must be an absolute http URL: " + url);
  }
  const auto slash = url.find('/', scheme + 3);
  Endpoint ep;
  ep.base = url.substr(0, slash);
  if (slash != std::string::npos) ep.prefix = url.substr(slash);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

std::vector<DenseVector> embed_batch(const EmbedProviderConfig& cfg, const Endpoint& ep,
                                     const std::vector<std::string>& texts,
                                     std::size_t begin, std::size_t end) {
  httplib::Client client(ep.base);
  const auto secs = cfg.timeout.count() / 1000;
  const auto usecs = (cfg.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  json body = {{"texts", json::array()}};
  for (std::size_t i = begin; i < end; ++i) body["texts"].push_back(texts[i]);

  auto res = client.Post(ep.prefix + "/embed", body.dump(), "application/json");
  if (!res) {
    throw ProviderError("embed: transport failure: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    std::string detail;
    try {
      detail = json::parse(res->body).value("error", "");
    } catch (const json::exception&) {
    }
    throw ProviderError("embed: provider returned HTTP " + std::to_string(res->status) +
                        (detail.empty() ? "" : ": " + detail));
  }

  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("embed: malformed provider response: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("dim") || !reply.contains("embeddings") ||
      !reply["embeddings"].is_array() || !reply["dim"].is_number_integer()) {
    throw ProviderError("embed: response must contain integer 'dim' and array 'embeddings'");
  }
  if (reply["dim"].get<std::size_t>() != cfg.dim) {
    throw ProviderError("embed: dimension mismatch: provider reports " +
                        reply["dim"].dump() + ", expected " + std::to_string(cfg.dim));
  }
  const auto& rows = reply["embeddings"];
  if (rows.size() != end - begin) {
    throw ProviderError("embed: provider returned " + std::to_string(rows.size()) +
                        " embeddings for " + std::to_string(end - begin) + " texts");
  }
  std::vector<DenseVector> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != cfg.dim) {
      throw ProviderError("embed: dimension mismatch in embedding row");
    }
    DenseVector v;
    v.values.reserve(cfg.dim);
    for (const auto& x : row) {
      if (!x.is_number()) throw ProviderError("embed: non-numeric embedding value");
      const double d = x.get<double>();
      if (!std::isfinite(d)) throw ProviderError("embed: non-finite embedding value");
      v.values.push_back(d);
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

std::vector<DenseVector> embed(const EmbedProviderConfig& cfg,
                               const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  cfg.validate();
  const Endpoint ep = parse_endpoint(cfg.endpoint);

  std::vector<std::pair<std::size_t, std::size_t>> chunks;
  for (std::size_t b = 0; b < texts.size(); b += cfg.batch_size) {
    chunks.emplace_back(b, std::min(texts.size(), b + cfg.batch_size));
  }

  std::vector<DenseVector> out;
  out.reserve(texts.size());
  // Waves of at most `parallelism` in-flight requests; reassembly follows
  // chunk order, so the result never depends on completion order.
  for (std::size_t w = 0; w < chunks.size(); w += cfg.parallelism) {
    const std::size_t wave_end = std::min(chunks.size(), w + cfg.parallelism);
    std::vector<std::future<std::vector<DenseVector>>> inflight;
    for (std::size_t c = w; c < wave_end; ++c) {
      inflight.push_back(std::async(std::launch::async, embed_batch, std::cref(cfg),
                                    std::cref(ep), std::cref(texts), chunks[c].first,
                                    chunks[c].second));
    }
    std::exception_ptr failure;
    for (auto& f : inflight) {
      try {
        auto part = f.get();
        if (!failure) {
          for (auto& v : part) out.push_back(std::move(v));
        }
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  return out;
}

}  // namespace hcsbc
