#pragma once

// Querying chat-completion endpoints: request templating, retries, bounded
// concurrency, trial records and their aggregation into choice counts.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "tqre/estimation.hpp"
#include "tqre/harness/parse.hpp"
#include "tqre/harness/prompt.hpp"
#include "tqre/simulate.hpp"

namespace tqre::harness {

using nlohmann::json;

enum class PersonaPlacement { User, System };

struct Endpoint {
  std::string name;
  std::string url;  // full chat-completion URL, e.g. http://host:port/v1/chat/completions
  std::string model;
  std::string auth_env;               // environment variable holding a bearer token; empty for none
  std::optional<double> temperature;  // provider default when absent
  std::string request_template = "openai-chat";  // builtin id or an inline JSON template
  std::string response_path = "/choices/0/message/content";
  int max_attempts = 3;
  double timeout_seconds = 60.0;
  double retry_backoff_seconds = 1.0;  // doubled after each transport failure
  PersonaPlacement persona_placement = PersonaPlacement::User;

  void check() const {
    if (url.empty()) throw DomainError("endpoint '" + name + "': url is empty");
    if (max_attempts < 1) throw DomainError("endpoint '" + name + "': max_attempts must be >= 1");
    if (!(timeout_seconds > 0.0)) throw DomainError("endpoint '" + name + "': timeout must be positive");
    if (retry_backoff_seconds < 0.0) throw DomainError("endpoint '" + name + "': negative backoff");
  }
};

inline json endpoint_to_json(const Endpoint& e) {
  json j{{"name", e.name},
         {"url", e.url},
         {"model", e.model},
         {"auth_env", e.auth_env},
         {"request_template", e.request_template},
         {"response_path", e.response_path},
         {"max_attempts", e.max_attempts},
         {"timeout_seconds", e.timeout_seconds},
         {"retry_backoff_seconds", e.retry_backoff_seconds},
         {"persona_placement", e.persona_placement == PersonaPlacement::User ? "user" : "system"}};
  j["temperature"] = e.temperature ? json(*e.temperature) : json(nullptr);
  return j;
}

inline Endpoint endpoint_from_json(const json& j) {
  try {
    Endpoint e;
    e.name = j.value("name", "");
    e.url = j.at("url").get<std::string>();
    e.model = j.value("model", "");
    e.auth_env = j.value("auth_env", "");
    if (j.contains("temperature") && !j["temperature"].is_null()) e.temperature = j["temperature"].get<double>();
    if (j.contains("request_template"))
      e.request_template = j["request_template"].is_string() ? j["request_template"].get<std::string>()
                                                             : j["request_template"].dump();
    e.response_path = j.value("response_path", e.response_path);
    e.max_attempts = j.value("max_attempts", e.max_attempts);
    e.timeout_seconds = j.value("timeout_seconds", e.timeout_seconds);
    e.retry_backoff_seconds = j.value("retry_backoff_seconds", e.retry_backoff_seconds);
    const auto placement = j.value("persona_placement", std::string("user"));
    if (placement == "user")
      e.persona_placement = PersonaPlacement::User;
    else if (placement == "system")
      e.persona_placement = PersonaPlacement::System;
    else
      throw DomainError("persona_placement must be 'user' or 'system'");
    if (e.name.empty()) e.name = e.model;
    e.check();
    return e;
  } catch (const json::exception& ex) {
    throw DomainError(std::string("malformed endpoint: ") + ex.what());
  }
}

struct ChatRequest {
  std::string system;  // empty when the persona travels with the user message
  std::string user;
};

// Request body with slots. A string that is exactly "{slot}" takes the slot's
// typed value and disappears when the slot is unset; an object inside an
// array that loses a member this way disappears with it. Slots embedded in
// longer strings are substituted as text.
inline json builtin_request_template(const std::string& id) {
  if (id == "openai-chat")
    return json::parse(R"({"model": "{model}",
      "messages": [{"role": "system", "content": "{system}"}, {"role": "user", "content": "{prompt}"}],
      "temperature": "{temperature}"})");
  if (id == "ollama-generate")
    return json::parse(R"({"model": "{model}", "system": "{system}", "prompt": "{prompt}", "stream": false,
      "options": {"temperature": "{temperature}"}})");
  throw DomainError("unknown request template '" + id + "'");
}

inline json resolve_request_template(const std::string& template_id) {
  if (!template_id.empty() && template_id.front() == '{') {
    try {
      return json::parse(template_id);
    } catch (const json::exception& ex) {
      throw DomainError(std::string("malformed request template: ") + ex.what());
    }
  }
  return builtin_request_template(template_id);
}

namespace detail {

using Slots = std::map<std::string, std::optional<json>>;

// Returns false when the node must be removed.
inline bool fill_slots(json& node, const Slots& slots) {
  if (node.is_string()) {
    std::string s = node.get<std::string>();
    if (s.size() > 2 && s.front() == '{' && s.back() == '}') {
      const auto it = slots.find(s.substr(1, s.size() - 2));
      if (it != slots.end()) {
        if (!it->second) return false;
        node = *it->second;
        return true;
      }
    }
    for (const auto& [name, value] : slots) {
      const std::string key = "{" + name + "}";
      const std::string text = !value ? "" : value->is_string() ? value->get<std::string>() : value->dump();
      for (auto p = s.find(key); p != std::string::npos; p = s.find(key, p + text.size())) s.replace(p, key.size(), text);
    }
    node = s;
    return true;
  }
  if (node.is_object()) {
    std::vector<std::string> drop;
    for (auto it = node.begin(); it != node.end(); ++it)
      if (!fill_slots(it.value(), slots)) drop.push_back(it.key());
    for (const auto& k : drop) node.erase(k);
    return true;
  }
  if (node.is_array()) {
    json kept = json::array();
    for (auto& el : node) {
      const std::size_t before = el.is_object() ? el.size() : 0;
      const bool keep = fill_slots(el, slots);
      if (keep && !(el.is_object() && el.size() < before)) kept.push_back(std::move(el));
    }
    node = std::move(kept);
  }
  return true;
}

}  // namespace detail

inline json render_request_body(const Endpoint& e, const ChatRequest& req) {
  json body = resolve_request_template(e.request_template);
  detail::Slots slots{{"model", json(e.model)},
                      {"prompt", json(req.user)},
                      {"system", req.system.empty() ? std::nullopt : std::optional<json>(json(req.system))},
                      {"temperature", e.temperature ? std::optional<json>(json(*e.temperature)) : std::nullopt}};
  detail::fill_slots(body, slots);
  return body;
}

struct TransportReply {
  bool ok = false;
  std::string text;   // extracted reply text when ok
  std::string error;  // diagnostic otherwise
};

using Transport = std::function<TransportReply(const Endpoint&, const ChatRequest&)>;

inline std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) return {url, "/"};
  return {url.substr(0, path), url.substr(path)};
}

inline TransportReply extract_reply(const std::string& body, const std::string& pointer) {
  try {
    const json j = json::parse(body);
    const json& v = j.at(json::json_pointer(pointer));
    if (!v.is_string()) return {false, "", "reply field at " + pointer + " is not a string"};
    return {true, v.get<std::string>(), ""};
  } catch (const json::exception& ex) {
    return {false, "", std::string("unreadable reply: ") + ex.what()};
  }
}

// POST over cpp-httplib with an optional bearer token from the environment.
inline Transport http_transport() {
  return [](const Endpoint& e, const ChatRequest& req) -> TransportReply {
    const auto [origin, path] = split_url(e.url);
    httplib::Client client(origin);
    if (!client.is_valid()) return {false, "", "unsupported url " + e.url};
    const auto timeout = std::chrono::duration<double>(e.timeout_seconds);
    const auto sec = static_cast<time_t>(e.timeout_seconds);
    const auto usec = static_cast<time_t>((timeout.count() - sec) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    httplib::Headers headers;
    if (!e.auth_env.empty())
      if (const char* tok = std::getenv(e.auth_env.c_str()); tok && *tok)
        headers.emplace("Authorization", std::string("Bearer ") + tok);
    const auto res = client.Post(path, headers, render_request_body(e, req).dump(), "application/json");
    if (!res) return {false, "", "request failed: " + httplib::to_string(res.error())};
    if (res->status != 200) return {false, "", "HTTP " + std::to_string(res->status)};
    return extract_reply(res->body, e.response_path);
  };
}

enum class ParseStatus { Ok, RetryExhausted, Refusal };

inline std::string_view to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::Ok: return "ok";
    case ParseStatus::RetryExhausted: return "retry_exhausted";
    case ParseStatus::Refusal: return "refusal";
  }
  return "";
}

inline ParseStatus parse_status_from_string(std::string_view s) {
  for (auto v : {ParseStatus::Ok, ParseStatus::RetryExhausted, ParseStatus::Refusal})
    if (to_string(v) == s) return v;
  throw DomainError("unknown parse status '" + std::string(s) + "'");
}

struct TrialRecord {
  std::string endpoint_name;
  std::string model_identifier;
  std::string game_id;
  Role role = Role::Row;
  std::string variant_descriptor;
  std::optional<Persona> persona;
  int trial_index = 0;
  std::string prompt_digest;  // FNV-1a 64 of the full prompt text, hex
  std::string raw_response_text;
  std::optional<int> parsed_action;
  ParseStatus parse_status = ParseStatus::RetryExhausted;
  std::string timestamp;  // ISO 8601 UTC
  int attempt_count = 0;
  std::optional<double> temperature;
};

inline json persona_to_json(const Persona& p) {
  json j = json::object();
  for (auto f : kPersonaFields)
    if (p.get(f)) j[std::string(field_name(f))] = *p.get(f);
  return j;
}

inline Persona persona_from_json(const json& j) {
  if (!j.is_object()) throw DomainError("persona must be a JSON object");
  Persona p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto f = field_from_name(it.key());
    if (!f) throw DomainError("unknown persona field '" + it.key() + "'");
    if (!it.value().is_null()) p.set(*f, it.value().get<std::string>());
  }
  p.check();
  return p;
}

inline json record_to_json(const TrialRecord& r) {
  json j;
  j["endpoint_name"] = r.endpoint_name;
  j["model_identifier"] = r.model_identifier;
  j["game_id"] = r.game_id;
  j["role"] = to_string(r.role);
  j["variant_descriptor"] = r.variant_descriptor;
  j["persona"] = r.persona ? persona_to_json(*r.persona) : json(nullptr);
  j["trial_index"] = r.trial_index;
  j["prompt_digest"] = r.prompt_digest;
  j["raw_response_text"] = r.raw_response_text;
  j["parsed_action"] = r.parsed_action ? json(*r.parsed_action) : json(nullptr);
  j["parse_status"] = to_string(r.parse_status);
  j["timestamp"] = r.timestamp;
  j["attempt_count"] = r.attempt_count;
  j["temperature"] = r.temperature ? json(*r.temperature) : json(nullptr);
  return j;
}

inline TrialRecord record_from_json(const json& j) {
  try {
    TrialRecord r;
    r.endpoint_name = j.at("endpoint_name").get<std::string>();
    r.model_identifier = j.at("model_identifier").get<std::string>();
    r.game_id = j.at("game_id").get<std::string>();
    r.role = role_from_string(j.at("role").get<std::string>());
    r.variant_descriptor = j.at("variant_descriptor").get<std::string>();
    if (!j.at("persona").is_null()) r.persona = persona_from_json(j["persona"]);
    r.trial_index = j.at("trial_index").get<int>();
    r.prompt_digest = j.at("prompt_digest").get<std::string>();
    r.raw_response_text = j.at("raw_response_text").get<std::string>();
    if (!j.at("parsed_action").is_null()) r.parsed_action = j["parsed_action"].get<int>();
    r.parse_status = parse_status_from_string(j.at("parse_status").get<std::string>());
    r.timestamp = j.at("timestamp").get<std::string>();
    r.attempt_count = j.at("attempt_count").get<int>();
    if (j.contains("temperature") && !j["temperature"].is_null()) r.temperature = j["temperature"].get<double>();
    return r;
  } catch (const json::exception& ex) {
    throw DomainError(std::string("malformed trial record: ") + ex.what());
  }
}

inline void write_jsonl(std::ostream& os, const std::vector<TrialRecord>& records) {
  for (const auto& r : records) os << record_to_json(r).dump() << '\n';
}

inline std::vector<TrialRecord> read_jsonl(std::istream& is) {
  std::vector<TrialRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& ex) {
      throw DomainError(std::string("malformed trial record: ") + ex.what());
    }
  }
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Independent single-turn trials of one prompt. Each trial retries on
// transport failure or an unparseable reply, re-sending the identical prompt.
inline std::vector<TrialRecord> run_session(const Endpoint& endpoint, const PromptSpec& spec, int n_trials,
                                            int parallelism, const Transport& transport = http_transport()) {
  endpoint.check();
  if (n_trials < 1) throw DomainError("run_session: n_trials must be >= 1");
  if (parallelism < 1) throw DomainError("run_session: parallelism must be >= 1");
  if (uses_persona(spec.variant)) spec.persona.check();

  ChatRequest request;
  const std::string preamble = prompt_preamble(spec);
  const std::string full = build_prompt(spec);
  if (endpoint.persona_placement == PersonaPlacement::System) {
    request.system = preamble;
    request.user = build_task_prompt(spec);
  } else {
    request.user = full;
  }
  const int n_actions = static_cast<int>(spec.game.actions(spec.role));
  const std::string digest = hex64(fnv1a64(full));

  std::vector<TrialRecord> records(static_cast<std::size_t>(n_trials));
  auto run_trial = [&](int index) {
    TrialRecord r;
    r.endpoint_name = endpoint.name;
    r.model_identifier = endpoint.model;
    r.game_id = spec.game.id;
    r.role = spec.role;
    r.variant_descriptor = std::string(to_string(spec.variant));
    if (uses_persona(spec.variant)) r.persona = spec.persona;
    r.trial_index = index;
    r.prompt_digest = digest;
    r.temperature = endpoint.temperature;
    double backoff = endpoint.retry_backoff_seconds;
    for (int attempt = 1; attempt <= endpoint.max_attempts; ++attempt) {
      r.attempt_count = attempt;
      TransportReply reply;
      try {
        reply = transport(endpoint, request);
      } catch (const std::exception& ex) {
        reply = {false, "", ex.what()};
      }
      if (!reply.ok) {
        r.parse_status = ParseStatus::RetryExhausted;
        r.raw_response_text = reply.error;
        if (attempt < endpoint.max_attempts && backoff > 0.0) {
          std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
          backoff *= 2.0;
        }
        continue;
      }
      r.raw_response_text = reply.text;
      const auto parsed = parse_choice(reply.text, n_actions);
      if (parsed.ok()) {
        r.parsed_action = parsed.action;
        r.parse_status = ParseStatus::Ok;
        break;
      }
      r.parse_status = ParseStatus::Refusal;
    }
    r.timestamp = utc_timestamp();
    records[static_cast<std::size_t>(index)] = std::move(r);
  };

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i; (i = next.fetch_add(1)) < n_trials;) run_trial(i);
  };
  const int threads = std::min(parallelism, n_trials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return records;
}

struct Aggregate {
  std::vector<ChoiceCounts> counts;  // one entry per role present, row before column
  long long total = 0;
  long long ok = 0;
  long long excluded = 0;
  std::map<std::string, long long> excluded_by_status;

  // Empty when nothing was excluded.
  std::string warning() const {
    if (excluded == 0) return "";
    std::string w = "excluded " + std::to_string(excluded) + " of " + std::to_string(total) + " trials (";
    bool first = true;
    for (const auto& [status, n] : excluded_by_status) {
      w += (first ? "" : ", ") + status + ": " + std::to_string(n);
      first = false;
    }
    return w + "); effective n = " + std::to_string(ok);
  }
};

// Counts parse-status-ok records; everything else is excluded and tallied.
inline Aggregate aggregate(const std::vector<TrialRecord>& records, const GameSpec& game) {
  if (records.empty()) throw DomainError("no records");
  Aggregate out;
  std::optional<ChoiceCounts> row, col;
  for (const auto& r : records) {
    if (r.game_id != game.id)
      throw DomainError("mixed game ids: record for '" + r.game_id + "' aggregated as '" + game.id + "'");
    if (!game.role_legal(r.role)) throw RoleUnsupported("record role not legal in '" + game.id + "'");
    auto& slot = r.role == Role::Row ? row : col;
    if (!slot) slot = ChoiceCounts{game.id, r.role, std::vector<long long>(game.actions(r.role), 0)};
    ++out.total;
    if (r.parse_status == ParseStatus::Ok && r.parsed_action && *r.parsed_action >= 0 &&
        static_cast<std::size_t>(*r.parsed_action) < game.actions(r.role)) {
      ++slot->counts[static_cast<std::size_t>(*r.parsed_action)];
      ++out.ok;
    } else {
      ++out.excluded;
      ++out.excluded_by_status[std::string(to_string(r.parse_status))];
    }
  }
  if (row) out.counts.push_back(*row);
  if (col) out.counts.push_back(*col);
  return out;
}

}  // namespace tqre::harness
