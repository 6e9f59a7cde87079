#pragma once

#include <thread>

#include <httplib.h>

#include "needs.hpp"

namespace needcast {

struct HttpSourceOptions {
    /// e.g. "http://localhost:8080"
    std::string base_url;
    /// Request path; the query is sent as the `q` parameter.
    std::string path = "/complete";
    int retries = 3;
    /// Maximum requests per second; 0 disables throttling.
    double rate_limit_qps = 0.0;
    std::chrono::milliseconds timeout{5000};
};

/// Remote completion endpoint. Accepts either a plain JSON array of strings or
/// the OpenSearch suggestion shape `[query, [s1, s2, ...]]`. A query whose
/// requests keep failing yields an empty list.
class HttpSuggestionSource : public SuggestionSource {
  public:
    explicit HttpSuggestionSource(HttpSourceOptions options)
        : m_options(std::move(options)), m_client(m_options.base_url) {
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(m_options.timeout);
        auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(m_options.timeout - secs);
        m_client.set_connection_timeout(secs.count(), usecs.count());
        m_client.set_read_timeout(secs.count(), usecs.count());
    }

    std::vector<std::string> suggest(const std::string& query) override {
        for (int attempt = 0; attempt <= m_options.retries; ++attempt) {
            throttle();
            auto res = m_client.Get(m_options.path, httplib::Params{{"q", query}}, httplib::Headers{});
            if (!res || res->status >= 500) continue;
            if (res->status != 200) break;
            try {
                return parse_body(res->body);
            } catch (const nlohmann::json::exception&) {
                break;
            }
        }
        ++m_failed;
        warn("no suggestions for '" + query + "' after retries");
        return {};
    }

    [[nodiscard]] std::size_t failed_queries() const noexcept { return m_failed; }

    static std::vector<std::string> parse_body(const std::string& body) {
        auto j = nlohmann::json::parse(body);
        const nlohmann::json* list = &j;
        if (j.is_array() && j.size() == 2 && j[0].is_string() && j[1].is_array()) list = &j[1];
        std::vector<std::string> out;
        for (const auto& s : *list) out.push_back(s.get<std::string>());
        return out;
    }

  private:
    void throttle() {
        if (m_options.rate_limit_qps <= 0.0) return;
        auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / m_options.rate_limit_qps));
        auto now = std::chrono::steady_clock::now();
        if (m_last && now < *m_last + interval) {
            std::this_thread::sleep_until(*m_last + interval);
            now = *m_last + interval;
        }
        m_last = now;
    }

    HttpSourceOptions m_options;
    httplib::Client m_client;
    std::optional<std::chrono::steady_clock::time_point> m_last;
    std::size_t m_failed = 0;
};

}  // namespace needcast
