#include <httplib.h>

#include <atomic>
#include <mutex>
#include <optional>

#include "ctxjudge/backends.h"
#include "ctxjudge/error.h"

namespace ctxjudge {

using nlohmann::json;

namespace {

std::atomic<int> g_remote_instances{0};

RemoteBackend::ModelEntry parse_model_entry(const json& m) {
  RemoteBackend::ModelEntry e;
  e.id = m.at("id").get<std::string>();
  e.context_limit = m.at("context_limit").get<long>();
  if (m.contains("bos_policy"))
    e.bos_when_unprefixed =
        m["bos_policy"].get<std::string>() == "prepend_when_unprefixed";
  return e;
}

}  // namespace

struct RemoteBackend::Impl {
  std::string url;
  std::string model_id;
  int max_concurrency;
  double timeout_seconds;
  mutable std::mutex mu;
  mutable std::optional<ModelEntry> model;

  std::unique_ptr<httplib::Client> client() const {
    auto c = std::make_unique<httplib::Client>(url);
    const auto secs = static_cast<time_t>(timeout_seconds);
    const auto usecs = static_cast<time_t>((timeout_seconds - secs) * 1e6);
    c->set_connection_timeout(secs, usecs);
    c->set_read_timeout(secs, usecs);
    c->set_write_timeout(secs, usecs);
    return c;
  }

  json post(const std::string& path, const json& body) const {
    auto res = client()->Post(path, body.dump(), "application/json");
    if (!res)
      throw BackendError("backend unreachable at " + url + path + " (" +
                             httplib::to_string(res.error()) + ")",
                         /*transient=*/true);
    check_status(*res, path);
    try {
      return json::parse(res->body);
    } catch (const json::parse_error&) {
      throw BackendError("backend returned malformed JSON from " + path);
    }
  }

  json get(const std::string& path) const {
    auto res = client()->Get(path);
    if (!res)
      throw BackendError("backend unreachable at " + url + path + " (" +
                             httplib::to_string(res.error()) + ")",
                         /*transient=*/true);
    check_status(*res, path);
    if (res->body.empty()) return json();
    try {
      return json::parse(res->body);
    } catch (const json::parse_error&) {
      throw BackendError("backend returned malformed JSON from " + path);
    }
  }

  static void check_status(const httplib::Response& res,
                           const std::string& path) {
    if (res.status == 200) return;
    std::string detail = res.body;
    if (res.status == 413) {
      long limit = 0;
      try {
        const auto body = json::parse(res.body);
        if (body.contains("context_limit")) limit = body["context_limit"].get<long>();
        if (body.contains("error")) detail = body["error"].get<std::string>();
      } catch (const std::exception&) {
      }
      throw ContextOverflowError("context overflow: " + detail, limit);
    }
    const bool transient = res.status >= 500;
    throw BackendError(path + " returned HTTP " + std::to_string(res.status) +
                           ": " + detail,
                       transient);
  }

  const ModelEntry& resolve_model() const {
    std::lock_guard lock(mu);
    if (!model) {
      const json body = get("/v1/models");
      for (const auto& m : body.at("models")) {
        auto e = parse_model_entry(m);
        if (e.id == model_id) {
          model = e;
          break;
        }
      }
      if (!model) throw BackendError("backend does not serve model '" + model_id + "'");
    }
    return *model;
  }
};

RemoteBackend::RemoteBackend(std::string url, std::string model_id,
                             int max_concurrency, double timeout_seconds)
    : impl_(std::make_unique<Impl>()) {
  while (!url.empty() && url.back() == '/') url.pop_back();
  impl_->url = std::move(url);
  impl_->model_id = std::move(model_id);
  impl_->max_concurrency = max_concurrency;
  impl_->timeout_seconds = timeout_seconds;
  ++g_remote_instances;
}

RemoteBackend::~RemoteBackend() { --g_remote_instances; }

int RemoteBackend::instances() { return g_remote_instances.load(); }

std::vector<RemoteBackend::ModelEntry> RemoteBackend::list_models() const {
  std::vector<ModelEntry> out;
  const json body = impl_->get("/v1/models");
  for (const auto& m : body.at("models")) out.push_back(parse_model_entry(m));
  return out;
}

BackendInfo RemoteBackend::info() const {
  const auto& m = impl_->resolve_model();
  return BackendInfo{"remote:" + impl_->url + ":" + m.id, m.id, m.context_limit,
                     impl_->max_concurrency, m.bos_when_unprefixed};
}

void RemoteBackend::check_health() {
  auto res = impl_->client()->Get("/health");
  if (!res)
    throw BackendError("backend unreachable at " + impl_->url + " (" +
                       httplib::to_string(res.error()) + ")");
  if (res->status != 200)
    throw BackendError("backend health check returned HTTP " +
                       std::to_string(res->status));
}

ScoredSequence RemoteBackend::score(const ScoreRequest& req) {
  const json body = {{"model", req.model_id.empty() ? impl_->model_id : req.model_id},
                     {"prefix", req.prefix},
                     {"continuation", req.continuation}};
  const json res = impl_->post("/v1/score", body);
  try {
    return res.get<ScoredSequence>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed /v1/score response: ") + e.what());
  }
}

std::vector<ScoredSequence> RemoteBackend::score_batch(
    std::span<const ScoreRequest> reqs) {
  json requests = json::array();
  for (const auto& r : reqs)
    requests.push_back({{"prefix", r.prefix}, {"continuation", r.continuation}});
  const json body = {{"model", impl_->model_id}, {"requests", requests}};
  const json res = impl_->post("/v1/batch_score", body);
  std::vector<ScoredSequence> out;
  try {
    for (const auto& r : res.at("results")) out.push_back(r.get<ScoredSequence>());
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed /v1/batch_score response: ") + e.what());
  }
  if (out.size() != reqs.size())
    throw BackendError("batch_score returned " + std::to_string(out.size()) +
                       " results for " + std::to_string(reqs.size()) + " requests");
  return out;
}

}  // namespace ctxjudge
