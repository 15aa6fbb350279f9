// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Adaptive elicitation sessions over the econ domain, persisted as one
// newline-delimited JSON log per session and served over HTTP.
//
// A session's state is a pure function of its config snapshot and the
// choices it has received, so the log is the only thing stored: restarting
// replays every file in the data directory. Timestamps are recorded in the
// log but never feed back into responses.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "ecd/econ.hpp"
#include "httplib.h"
#include "json.hpp"

namespace ecd::service {

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Conflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogRecord {
  std::string session_id;
  std::uint64_t seq = 0;
  std::string event;  // created | presented | answered | completed
  nlohmann::json payload;
};

inline nlohmann::json to_json(const LogRecord& r) {
  return {{"session_id", r.session_id}, {"seq", r.seq}, {"event", r.event}, {"payload", r.payload}};
}

inline LogRecord record_from_json(const nlohmann::json& j) {
  return {j.at("session_id").get<std::string>(), j.at("seq").get<std::uint64_t>(),
          j.at("event").get<std::string>(), j.at("payload")};
}

struct HistoryEntry {
  std::size_t test = 0;
  int choice = 0;
  std::string timestamp;
};

struct SessionState {
  std::string id;
  std::shared_ptr<const econ::EconModel> model;
  econ::GridPosterior posterior;
  std::vector<char> presented;
  std::vector<HistoryEntry> history;
  std::optional<std::size_t> pending;
  bool completed = false;
  std::vector<LogRecord> log;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// 128 random bits as 32 hex digits.
inline std::string random_session_id() {
  std::random_device rd;
  char buf[33];
  std::uint64_t hi = (std::uint64_t{rd()} << 32) | rd();
  std::uint64_t lo = (std::uint64_t{rd()} << 32) | rd();
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

inline nlohmann::json posterior_summary(const SessionState& s, std::size_t top = 5) {
  const auto& model = *s.model;
  const auto m = econ::theory_marginals(model, s.posterior);
  nlohmann::json marg = nlohmann::json::object();
  for (std::size_t i = 0; i < 4; ++i) marg[econ::to_string(econ::kTheories[i])] = m[i];
  const auto map = econ::map_theory(model, s.posterior);

  std::vector<std::size_t> order(model.num_points());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.posterior.weights[a] > s.posterior.weights[b];
  });
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t k = 0; k < std::min(top, order.size()); ++k)
    points.push_back({{"point", model.point(order[k]).label()},
                      {"probability", s.posterior.weights[order[k]]}});
  return {{"session_id", s.id},
          {"marginals", marg},
          {"map_theory", map ? nlohmann::json(econ::to_string(*map)) : nlohmann::json(nullptr)},
          {"history_length", s.history.size()},
          {"budget", model.config().budget},
          {"status", s.completed ? "completed" : "active"},
          {"top_points", points}};
}

namespace detail {

inline void append(SessionState& s, const std::string& event, nlohmann::json payload) {
  s.log.push_back({s.id, s.log.size(), event, std::move(payload)});
}

// Selects and logs the next pair, or completes the session.
inline void advance(SessionState& s) {
  const auto& model = *s.model;
  if (static_cast<int>(s.history.size()) >= model.config().budget) {
    s.completed = true;
    s.pending.reset();
    append(s, "completed", {{"history_length", s.history.size()}});
    return;
  }
  const auto next = econ::select_test(model, s.posterior, s.presented, model.config().rule);
  if (!next) {
    s.completed = true;
    s.pending.reset();
    append(s, "completed", {{"history_length", s.history.size()}});
    return;
  }
  s.pending = *next;
  s.presented[*next] = 1;
  append(s, "presented", {{"pair_index", *next}, {"pair", econ::pair_json(model, *next)}});
}

inline void apply_answer(SessionState& s, int choice, std::string timestamp) {
  const std::size_t t = *s.pending;
  s.posterior = econ::bayes_update(*s.model, s.posterior, t, choice);
  s.history.push_back({t, choice, timestamp});
  s.pending.reset();
  append(s, "answered", {{"pair_index", t}, {"choice", choice}, {"timestamp", std::move(timestamp)}});
  advance(s);
}

}  // namespace detail

inline SessionState start_session(std::string id, std::shared_ptr<const econ::EconModel> model,
                                  const std::string& timestamp) {
  SessionState s;
  s.id = std::move(id);
  s.model = std::move(model);
  s.posterior = s.model->prior();
  s.presented.assign(s.model->num_tests(), 0);
  detail::append(s, "created",
                 {{"config", econ::to_json(s.model->config())}, {"timestamp", timestamp}});
  detail::advance(s);
  return s;
}

// Only the selection rule matters for state, and the random rule would make
// responses depend on hidden state.
inline void check_session_config(const econ::EconConfig& c) {
  c.validate();
  if (c.rule == econ::Rule::random)
    throw ValidationError("sessions need a deterministic selection criterion");
}

using ModelFactory =
    std::function<std::shared_ptr<const econ::EconModel>(const econ::EconConfig&)>;

inline std::shared_ptr<const econ::EconModel> build_model(const econ::EconConfig& c) {
  return std::make_shared<const econ::EconModel>(c);
}

// Rebuilds a session from its log. Every record must be exactly the one the
// records before it imply; anything else (gaps, reordering, a pair the rule
// would not have chosen, a missing answer) is an error.
inline SessionState replay_log(const std::vector<LogRecord>& log,
                               const ModelFactory& factory = build_model) {
  auto fail = [](std::size_t i, const std::string& why) {
    throw ValidationError("replay: record " + std::to_string(i) + ": " + why);
  };
  if (log.empty() || log[0].event != "created")
    throw ValidationError("replay: log must start with a 'created' record");
  const econ::EconConfig config = econ::econ_config_from_snapshot(log[0].payload.at("config"));
  check_session_config(config);
  SessionState s = start_session(log[0].session_id, factory(config), "");

  std::size_t i = 0;
  auto check = [&](std::size_t k) {
    if (k >= log.size()) fail(k, "missing '" + s.log[k].event + "' record");
    const auto& want = s.log[k];
    const auto& got = log[k];
    if (got.seq != k) fail(k, "sequence number " + std::to_string(got.seq));
    if (got.session_id != s.id) fail(k, "belongs to session " + got.session_id);
    if (got.event != want.event) fail(k, "expected '" + want.event + "', found '" + got.event + "'");
    if (want.payload.contains("pair_index") &&
        got.payload.value("pair_index", nlohmann::json()) != want.payload.at("pair_index"))
      fail(k, "pair index differs from the selection rule");
  };
  auto check_generated = [&] {
    for (; i < s.log.size(); ++i) check(i);
  };
  check_generated();
  while (i < log.size()) {
    const auto& r = log[i];
    if (r.event != "answered") fail(i, "unexpected '" + r.event + "' record");
    if (!s.pending) fail(i, "answer without a presented pair");
    const int choice = r.payload.at("choice").get<int>();
    econ::check_choice(choice);
    detail::apply_answer(s, choice, r.payload.value("timestamp", std::string()));
    check_generated();
  }
  s.log = log;
  return s;
}

// Sessions keyed by id. Mutations on one session are serialized with a
// try-lock (a concurrent second mutation is a conflict); reads copy an
// immutable snapshot and never wait on a writer.
class SessionStore {
 public:
  SessionStore(std::filesystem::path data_dir, nlohmann::json default_config,
               std::function<std::string()> id_source = random_session_id)
      : dir_(std::move(data_dir)),
        default_config_(std::move(default_config)),
        next_id_(std::move(id_source)) {
    std::filesystem::create_directories(dir_);
    check_session_config(econ::econ_config_from_json(default_config_));
  }

  // Replays every log in the data directory. Returns the number restored.
  std::size_t restore() {
    std::size_t restored = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (entry.path().extension() != ".ndjson") continue;
      std::vector<LogRecord> log;
      std::ifstream in(entry.path());
      for (std::string line; std::getline(in, line);)
        if (!line.empty()) log.push_back(record_from_json(nlohmann::json::parse(line)));
      auto state = std::make_shared<const SessionState>(replay_log(log, factory()));
      auto session = std::make_shared<Session>();
      session->snapshot = state;
      session->written = state->log.size();
      std::unique_lock lock(map_mutex_);
      sessions_[state->id] = session;
      ++restored;
    }
    return restored;
  }

  // `overrides` is merged onto the default econ config.
  nlohmann::json create(const nlohmann::json& overrides = nlohmann::json::object()) {
    nlohmann::json cfg_json = default_config_;
    if (!overrides.is_null()) {
      if (!overrides.is_object()) throw ValidationError("config must be a JSON object");
      cfg_json.merge_patch(overrides);
    }
    const econ::EconConfig cfg = econ::econ_config_from_json(cfg_json);
    check_session_config(cfg);

    std::string id;
    {
      std::shared_lock lock(map_mutex_);
      do id = next_id_();
      while (sessions_.count(id));
    }
    auto session = std::make_shared<Session>();
    std::lock_guard write(session->write);
    auto state = std::make_shared<SessionState>(start_session(id, factory()(cfg), utc_timestamp()));
    persist(*session, *state);
    session->snapshot = state;
    {
      std::unique_lock lock(map_mutex_);
      sessions_[id] = session;
    }
    nlohmann::json out = {{"session_id", id},
                          {"prior", econ::to_string(cfg.prior)},
                          {"budget", cfg.budget}};
    out["test"] = state->pending ? econ::pair_json(*state->model, *state->pending) : nullptr;
    return out;
  }

  // `pair_index`, when given, must name the pending pair (guards against a
  // resubmitted answer for an earlier pair).
  nlohmann::json answer(const std::string& id, int choice,
                        std::optional<std::size_t> pair_index = std::nullopt) {
    auto session = find(id);
    std::unique_lock write(session->write, std::try_to_lock);
    if (!write.owns_lock()) throw Conflict("session " + id + " is busy");
    econ::check_choice(choice);
    auto current = snapshot(*session);
    if (current->completed) throw Conflict("session " + id + " is completed");
    if (!current->pending) throw Conflict("session " + id + " has no pending pair");
    if (pair_index && *pair_index != *current->pending)
      throw Conflict("pair " + std::to_string(*pair_index) + " was already answered");
    auto next = std::make_shared<SessionState>(*current);
    detail::apply_answer(*next, choice, utc_timestamp());
    persist(*session, *next);
    {
      std::lock_guard lock(session->snap_mutex);
      session->snapshot = next;
    }
    nlohmann::json out = {{"posterior", posterior_summary(*next)}, {"completed", next->completed}};
    out["next_test"] = next->pending ? econ::pair_json(*next->model, *next->pending) : nullptr;
    return out;
  }

  nlohmann::json posterior(const std::string& id) const {
    return posterior_summary(*snapshot(*find(id)));
  }

  std::vector<LogRecord> log(const std::string& id) const { return snapshot(*find(id))->log; }

  std::shared_ptr<const SessionState> state(const std::string& id) const {
    return snapshot(*find(id));
  }

  const std::filesystem::path& data_dir() const { return dir_; }

 private:
  struct Session {
    std::mutex write;
    mutable std::mutex snap_mutex;  // guards the pointer swap only
    std::shared_ptr<const SessionState> snapshot;
    std::size_t written = 0;  // log records already on disk
  };

  ModelFactory factory() {
    return [this](const econ::EconConfig& c) {
      const std::string key = econ::to_json(c).dump();
      std::lock_guard lock(model_mutex_);
      auto& slot = models_[key];
      if (!slot) slot = build_model(c);
      return slot;
    };
  }

  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("unknown session " + id);
    return it->second;
  }

  static std::shared_ptr<const SessionState> snapshot(const Session& s) {
    std::lock_guard lock(s.snap_mutex);
    return s.snapshot;
  }

  // Appends the new records and syncs before anything is acknowledged.
  void persist(Session& session, const SessionState& state) {
    const auto path = dir_ / (state.id + ".ndjson");
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::string buf;
    for (std::size_t i = session.written; i < state.log.size(); ++i)
      buf += to_json(state.log[i]).dump() + "\n";
    const bool ok = std::fwrite(buf.data(), 1, buf.size(), f) == buf.size() &&
                    std::fflush(f) == 0 && ::fsync(fileno(f)) == 0;
    std::fclose(f);
    if (!ok) throw std::runtime_error("failed to persist " + path.string());
    session.written = state.log.size();
  }

  std::filesystem::path dir_;
  nlohmann::json default_config_;
  std::function<std::string()> next_id_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex model_mutex_;
  std::map<std::string, std::shared_ptr<const econ::EconModel>> models_;
};

// ---------------------------------------------------------------------------
// HTTP binding.

inline void register_routes(httplib::Server& server, SessionStore& store, bool cors = true) {
  if (cors)
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});

  auto reply = [](httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto guarded = [reply](auto&& fn) {
    return [fn, reply](const httplib::Request& req, httplib::Response& res) {
      try {
        reply(res, 200, fn(req));
      } catch (const NotFound& e) {
        reply(res, 404, {{"error", e.what()}});
      } catch (const Conflict& e) {
        reply(res, 409, {{"error", e.what()}});
      } catch (const ValidationError& e) {
        reply(res, 400, {{"error", e.what()}});
      } catch (const nlohmann::json::exception& e) {
        reply(res, 400, {{"error", std::string("bad request body: ") + e.what()}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}});
      }
    };
  };
  auto body_json = [](const httplib::Request& req) {
    return req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
  };

  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/sessions", guarded([&store, body_json](const httplib::Request& req) {
                const auto body = body_json(req);
                return store.create(body.value("config", nlohmann::json::object()));
              }));
  server.Post(R"(/sessions/([0-9a-zA-Z_-]+)/answer)",
              guarded([&store, body_json](const httplib::Request& req) {
                const auto body = body_json(req);
                if (!body.contains("choice") || !body.at("choice").is_number_integer())
                  throw ValidationError("body needs an integer 'choice'");
                std::optional<std::size_t> pair;
                if (body.contains("pair_index")) pair = body.at("pair_index").get<std::size_t>();
                return store.answer(req.matches[1], body.at("choice").get<int>(), pair);
              }));
  server.Get(R"(/sessions/([0-9a-zA-Z_-]+)/posterior)",
             guarded([&store](const httplib::Request& req) { return store.posterior(req.matches[1]); }));
  server.Get(R"(/sessions/([0-9a-zA-Z_-]+)/log)", guarded([&store](const httplib::Request& req) {
               nlohmann::json records = nlohmann::json::array();
               for (const auto& r : store.log(req.matches[1])) records.push_back(to_json(r));
               return nlohmann::json{{"session_id", std::string(req.matches[1])},
                                     {"records", records}};
             }));
}

}  // namespace ecd::service
