#pragma once

// HTTP implementation of LiveBackend. Include this header from exactly one
// translation unit per binary that needs network access.

#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lvd/llm_client.hpp"

namespace lvd::llm {

inline std::string LiveBackend::complete(const LlmConfig& cfg,
                                         const std::vector<prompting::ChatMessage>& messages,
                                         const std::string& key) {
  // Split endpoint into host part and path. Accepts http://host[:port]/path.
  const std::string& ep = cfg.endpoint;
  auto scheme_end = ep.find("://");
  if (scheme_end == std::string::npos)
    throw LlmError(LlmErrorKind::Transport, "endpoint missing scheme: " + ep);
  auto path_start = ep.find('/', scheme_end + 3);
  std::string base = path_start == std::string::npos ? ep : ep.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : ep.substr(path_start);

  nlohmann::json body;
  body["model"] = cfg.model;
  body["temperature"] = cfg.temperature;
  body["max_tokens"] = cfg.max_tokens;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : messages)
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Client client(base);
  client.set_connection_timeout(cfg.timeout_seconds);
  client.set_read_timeout(cfg.timeout_seconds);

  httplib::Headers headers;
  if (!cfg.api_key_env.empty()) {
    if (const char* apikey = std::getenv(cfg.api_key_env.c_str()); apikey && *apikey)
      headers.emplace("Authorization", std::string("Bearer ") + apikey);
  }

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res)
    throw LlmError(LlmErrorKind::Transport,
                   "request to " + ep + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw LlmError(LlmErrorKind::Transport,
                   "HTTP " + std::to_string(res->status) + " from " + ep);

  std::string content;
  try {
    auto parsed = nlohmann::json::parse(res->body);
    content = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw LlmError(LlmErrorKind::Transport,
                   std::string("malformed completion envelope: ") + e.what());
  }

  detail::write_cache_file(cfg, key, content);
  return content;
}

}  // namespace lvd::llm
