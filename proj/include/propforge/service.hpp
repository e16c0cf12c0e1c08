#pragma once

// JSON facade over the trained models and the simulator. Handlers take the
// raw request body and return a status plus JSON document, so they can be
// exercised without a socket; serve() binds them to HTTP routes.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "propforge/cfm.hpp"
#include "propforge/surrogate.hpp"

namespace propforge::service {

inline constexpr std::size_t kMaxGenerateCount = 1000;
inline constexpr std::size_t kMaxSteps = 1000;
inline constexpr double kDefaultTolerance = 0.02;

struct Response final {
    int status = 200;
    nlohmann::json body;
};

struct ServiceOptions final {
    std::size_t default_steps = 100;
    std::uint64_t default_seed = 0;
};

class DesignService final {
public:
    // Either model may be absent; generate then answers 503.
    DesignService(std::optional<cfm::CfmModel> cfm, std::optional<surrogate::SurrogateSet> surrogates,
                  ServiceOptions options = {});

    // Loads cfm.json and the surrogate checkpoints from `dir` when present.
    static DesignService from_directory(const std::filesystem::path& dir, ServiceOptions options = {});

    Response handle_generate(const std::string& body) const;
    Response handle_simulate(const std::string& body) const;
    Response handle_geometry(const std::string& body) const;
    Response handle_model_info() const;

    bool ready() const noexcept { return cfm_.has_value() && surrogates_.has_value(); }

private:
    std::optional<cfm::CfmModel> cfm_;
    std::optional<surrogate::SurrogateSet> surrogates_;
    ServiceOptions options_;
    std::string source_;
};

// Error document: {"error": {"status", "message", "field"?}}.
Response error_response(int status, const std::string& message, const std::string& field = {});

// Blocks until stop() is called on the running server. `on_ready` receives
// the bound port (useful with port 0).
class Server final {
public:
    explicit Server(const DesignService& service);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Returns false when the address cannot be bound.
    bool listen(const std::string& host, int port, const std::function<void(int)>& on_ready = {});
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    Impl* impl_;
};

}  // namespace propforge::service
