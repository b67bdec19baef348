#include "closedtest/service.hpp"

#include <chrono>
#include <fstream>
#include <random>

#include <httplib.h>

namespace closedtest {

using nlohmann::json;

namespace {

json family_json(const SetFamily& family, const PValueStudy& study) {
    json out = json::array();
    for (const auto& set : family.sets()) {
        json row = json::array();
        for (auto i : set) row.push_back(study.label(i));
        out.push_back(std::move(row));
    }
    return out;
}

json set_json(const HypothesisSet& set, const PValueStudy& study) {
    json out = json::array();
    for (auto i : set) out.push_back(study.label(i));
    return out;
}

ApiResponse not_found(std::string_view id) {
    return {404, error_body("not_found", "unknown session " + std::string(id))};
}

ApiResponse families_unavailable(const Session& s, std::size_t closure_cap) {
    return {409, error_body("exact_unavailable",
                            "set families require m <= " + std::to_string(closure_cap) +
                                " (the closure cap); this session has m=" +
                                std::to_string(s.study.m()) + ". Use /bound for large studies.")};
}

ApiResponse validation_failure(const ValidationError& e) {
    return {400, error_body("validation_error", e.what(), e.field())};
}

}  // namespace

json error_body(std::string_view code, std::string_view message, std::string_view field) {
    json body{{"code", code}, {"message", message}};
    if (!field.empty()) body["field"] = field;
    return body;
}

SessionService::SessionService() : SessionService(Options{}) {}

SessionService::SessionService(Options options) : options_(std::move(options)) {
    if (options_.max_sessions == 0) throw ConfigError("max_sessions must be positive");
    if (options_.closure_cap > kHardClosureCap) throw ConfigError("closure_cap exceeds hard ceiling 25");
    std::random_device rd;
    id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
               static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
    if (options_.study_dir) std::filesystem::create_directories(*options_.study_dir);
}

std::string SessionService::next_id() {
    std::lock_guard lock(mutex_);
    const std::uint64_t v = mix64(id_salt_ + ++id_counter_);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::shared_ptr<const Session> SessionService::build(std::string id, PValueStudy study, double alpha,
                                                     LocalTest method) const {
    auto shortcut = preprocess(study, alpha);
    std::optional<ClosureMap> closure;
    std::optional<SetFamily> defining;
    std::optional<DualizationResult> dual;
    if (study.m() <= options_.closure_cap) {
        closure = full_closure(study, {alpha, method, options_.closure_cap});
        defining = closedtest::defining_family(*closure);
        dual = minimal_transversals(*defining);
    }
    return std::make_shared<const Session>(Session{std::move(id), std::move(study), alpha, method,
                                                   std::move(shortcut), std::move(closure),
                                                   std::move(defining), std::move(dual)});
}

void SessionService::insert(std::shared_ptr<const Session> session) {
    const std::string id = session->id;
    std::lock_guard lock(mutex_);
    if (auto it = sessions_.find(id); it != sessions_.end()) {
        lru_.erase(it->second.second);
        sessions_.erase(it);
    }
    lru_.push_front(id);
    sessions_.emplace(id, std::make_pair(std::move(session), lru_.begin()));
    while (sessions_.size() > options_.max_sessions) {
        sessions_.erase(lru_.back());
        lru_.pop_back();
    }
}

void SessionService::persist(const Session& session) const {
    if (!options_.study_dir) return;
    json doc{{"labels", json::array()}, {"pvalues", json::array()},
             {"alpha", session.alpha}, {"method", to_string(session.method)}};
    for (std::size_t i = 0; i < session.study.m(); ++i) {
        doc["labels"].push_back(session.study.label(i));
        doc["pvalues"].push_back(session.study.pvalue(i));
    }
    const auto path = *options_.study_dir / (session.id + ".json");
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        out << doc.dump();
    }
    std::filesystem::rename(tmp, path);
}

std::shared_ptr<const Session> SessionService::restore(const std::string& id) const {
    if (!options_.study_dir) return nullptr;
    if (id.empty() || id.find_first_not_of("0123456789abcdef") != std::string::npos) return nullptr;
    std::ifstream in(*options_.study_dir / (id + ".json"));
    if (!in) return nullptr;
    try {
        const auto doc = json::parse(in);
        PValueStudy study(doc.at("labels").get<std::vector<std::string>>(),
                          doc.at("pvalues").get<std::vector<double>>());
        return build(id, std::move(study), doc.at("alpha").get<double>(),
                     parse_local_test(doc.at("method").get<std::string>()));
    } catch (const std::exception&) {
        return nullptr;
    }
}

std::shared_ptr<const Session> SessionService::find(std::string_view id) {
    const std::string key(id);
    {
        std::lock_guard lock(mutex_);
        if (auto it = sessions_.find(key); it != sessions_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second.second);
            return it->second.first;
        }
    }
    auto restored = restore(key);
    if (restored) insert(restored);
    return restored;
}

std::size_t SessionService::cached_sessions() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

// ---------------------------------------------------------------------------

ApiResponse SessionService::create_session(const json& payload) {
    if (!payload.is_object()) return {400, error_body("bad_request", "expected a JSON object")};
    try {
        if (!payload.contains("pvalues") || !payload["pvalues"].is_array())
            throw ValidationError("pvalues must be an array of numbers", "pvalues");
        const auto& pv = payload["pvalues"];
        if (pv.size() > options_.max_m)
            return {413, error_body("too_large", "m=" + std::to_string(pv.size()) +
                                                     " exceeds the limit of " +
                                                     std::to_string(options_.max_m),
                                    "pvalues")};
        std::vector<double> pvalues;
        pvalues.reserve(pv.size());
        for (const auto& v : pv) {
            if (!v.is_number()) throw ValidationError("pvalues must be numbers", "pvalues");
            pvalues.push_back(v.get<double>());
        }
        std::vector<std::string> labels;
        if (payload.contains("labels") && !payload["labels"].is_null()) {
            if (!payload["labels"].is_array()) throw ValidationError("labels must be an array", "labels");
            for (const auto& l : payload["labels"]) {
                if (!l.is_string()) throw ValidationError("labels must be strings", "labels");
                labels.push_back(l.get<std::string>());
            }
        } else {
            for (std::size_t i = 0; i < pvalues.size(); ++i) labels.push_back("h" + std::to_string(i + 1));
        }
        double alpha = kDefaultAlpha;
        if (payload.contains("alpha")) {
            if (!payload["alpha"].is_number()) throw ValidationError("alpha must be a number", "alpha");
            alpha = payload["alpha"].get<double>();
        }
        validate_alpha(alpha);
        LocalTest method = LocalTest::Simes;
        if (payload.contains("method")) {
            if (!payload["method"].is_string()) throw ValidationError("method must be a string", "method");
            try {
                method = parse_local_test(payload["method"].get<std::string>());
            } catch (const ConfigError& e) {
                throw ValidationError(e.what(), "method");
            }
        }
        PValueStudy study(std::move(labels), std::move(pvalues));
        auto session = build(next_id(), std::move(study), alpha, method);
        persist(*session);
        json body{{"id", session->id}, {"m", session->study.m()},
                  {"exact_available", session->exact_available()}};
        insert(std::move(session));
        return {201, std::move(body)};
    } catch (const ValidationError& e) {
        return validation_failure(e);
    }
}

ApiResponse SessionService::bound(std::string_view id, std::string_view ids_csv) {
    const auto s = find(id);
    if (!s) return not_found(id);
    try {
        const auto set = parse_label_set(s->study, ids_csv);
        BoundResult result;
        if (s->method == LocalTest::Simes) {
            result = shortcut_bound(s->shortcut, set);
        } else if (s->closure) {
            result = discovery_bound(*s->closure, set);
        } else {
            return families_unavailable(*s, options_.closure_cap);
        }
        return {200, json{{"set", set_json(set, s->study)},
                          {"size", set.size()},
                          {"d", result.d},
                          {"alpha", result.alpha},
                          {"method", to_string(s->method)}}};
    } catch (const ValidationError& e) {
        return validation_failure(e);
    }
}

ApiResponse SessionService::defining(std::string_view id) {
    const auto s = find(id);
    if (!s) return not_found(id);
    if (!s->exact_available()) return families_unavailable(*s, options_.closure_cap);
    return {200, json{{"alpha", s->alpha}, {"sets", family_json(*s->defining, s->study)}}};
}

ApiResponse SessionService::dual(std::string_view id) {
    const auto s = find(id);
    if (!s) return not_found(id);
    if (!s->exact_available()) return families_unavailable(*s, options_.closure_cap);
    return {200, json{{"alpha", s->alpha},
                      {"sets", family_json(s->dual->transversals, s->study)},
                      {"truncated", s->dual->truncated}}};
}

ApiResponse SessionService::condition(std::string_view id, const json& payload) {
    const auto s = find(id);
    if (!s) return not_found(id);
    if (!s->exact_available()) return families_unavailable(*s, options_.closure_cap);
    try {
        std::vector<std::size_t> known;
        if (payload.is_object() && payload.contains("known_true_nulls")) {
            const auto& arr = payload["known_true_nulls"];
            if (!arr.is_array()) throw ValidationError("known_true_nulls must be an array", "known_true_nulls");
            for (const auto& l : arr) {
                if (!l.is_string()) throw ValidationError("labels must be strings", "known_true_nulls");
                try {
                    known.push_back(s->study.index_of(l.get<std::string>()));
                } catch (const ValidationError& e) {
                    throw ValidationError(e.what(), "known_true_nulls");
                }
            }
        } else if (!payload.is_object()) {
            throw ValidationError("expected a JSON object", "known_true_nulls");
        }
        std::sort(known.begin(), known.end());
        known.erase(std::unique(known.begin(), known.end()), known.end());
        const auto conditioned = condition_on_nulls(s->dual->transversals, HypothesisSet(known, s->study.m()));
        return {200, json{{"alpha", s->alpha},
                          {"surviving", family_json(conditioned.surviving, s->study)},
                          {"implicated", set_json(conditioned.implicated, s->study)},
                          {"truncated", s->dual->truncated}}};
    } catch (const ValidationError& e) {
        return validation_failure(e);
    }
}

// ---------------------------------------------------------------------------

void SessionService::mount(httplib::Server& server, const std::optional<std::filesystem::path>& ui_dir) {
    auto reply = [](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto parse_body = [](const httplib::Request& req, json& out) {
        if (req.body.empty()) {
            out = json::object();
            return true;
        }
        out = json::parse(req.body, nullptr, false);
        return !out.is_discarded();
    };

    server.Post("/api/sessions", [this, reply, parse_body](const httplib::Request& req, httplib::Response& res) {
        json payload;
        if (!parse_body(req, payload)) return reply(res, {400, error_body("bad_json", "request body is not valid JSON")});
        reply(res, create_session(payload));
    });
    server.Get(R"(/api/sessions/([0-9A-Za-z]+)/bound)", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, bound(req.matches[1].str(), req.has_param("ids") ? req.get_param_value("ids") : ""));
    });
    server.Get(R"(/api/sessions/([0-9A-Za-z]+)/defining)", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, defining(req.matches[1].str()));
    });
    server.Get(R"(/api/sessions/([0-9A-Za-z]+)/dual)", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, dual(req.matches[1].str()));
    });
    server.Post(R"(/api/sessions/([0-9A-Za-z]+)/condition)",
                [this, reply, parse_body](const httplib::Request& req, httplib::Response& res) {
                    json payload;
                    if (!parse_body(req, payload))
                        return reply(res, {400, error_body("bad_json", "request body is not valid JSON")});
                    reply(res, condition(req.matches[1].str(), payload));
                });
    if (ui_dir && std::filesystem::is_directory(*ui_dir)) server.set_mount_point("/", ui_dir->string());
}

}  // namespace closedtest
