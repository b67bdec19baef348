#pragma once

#include <cstddef>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "closedtest/closure.hpp"
#include "closedtest/core.hpp"
#include "closedtest/dualization.hpp"
#include "closedtest/set_family.hpp"
#include "closedtest/shortcut.hpp"

namespace httplib {
class Server;
}

namespace closedtest {

/// An uploaded study with everything precomputed. Immutable once built.
struct Session {
    std::string id;
    PValueStudy study;
    double alpha;
    LocalTest method;
    SimesShortcutState shortcut;
    std::optional<ClosureMap> closure;
    std::optional<SetFamily> defining;
    std::optional<DualizationResult> dual;

    bool exact_available() const noexcept { return closure.has_value(); }
};

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// JSON API over in-memory sessions with LRU eviction and optional
/// write-through persistence. Thread-safe; handlers never mutate a session.
class SessionService {
public:
    struct Options {
        std::size_t max_sessions = 64;
        std::size_t max_m = 2'000'000;
        std::size_t closure_cap = kDefaultClosureCap;
        std::optional<std::filesystem::path> study_dir;
    };

    SessionService();
    explicit SessionService(Options options);

    // POST /api/sessions
    ApiResponse create_session(const nlohmann::json& payload);
    // GET /api/sessions/{id}/bound?ids=a,b,c
    ApiResponse bound(std::string_view id, std::string_view ids_csv);
    // GET /api/sessions/{id}/defining
    ApiResponse defining(std::string_view id);
    // GET /api/sessions/{id}/dual
    ApiResponse dual(std::string_view id);
    // POST /api/sessions/{id}/condition {known_true_nulls: [...]}
    ApiResponse condition(std::string_view id, const nlohmann::json& payload);

    std::shared_ptr<const Session> find(std::string_view id);
    std::size_t cached_sessions() const;

    /// Registers the API routes and, when given, a static mount for the UI.
    void mount(httplib::Server& server,
               const std::optional<std::filesystem::path>& ui_dir = std::nullopt);

private:
    std::shared_ptr<const Session> build(std::string id, PValueStudy study, double alpha,
                                         LocalTest method) const;
    void insert(std::shared_ptr<const Session> session);
    void persist(const Session& session) const;
    std::shared_ptr<const Session> restore(const std::string& id) const;
    std::string next_id();

    Options options_;
    mutable std::mutex mutex_;
    std::list<std::string> lru_;
    std::unordered_map<std::string,
                       std::pair<std::shared_ptr<const Session>, std::list<std::string>::iterator>>
        sessions_;
    std::uint64_t id_counter_ = 0;
    std::uint64_t id_salt_ = 0;
};

nlohmann::json error_body(std::string_view code, std::string_view message,
                          std::string_view field = {});

}  // namespace closedtest
