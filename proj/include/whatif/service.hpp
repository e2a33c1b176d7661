#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "whatif/classifier.hpp"
#include "whatif/image.hpp"
#include "whatif/model.hpp"
#include "whatif/patchmatch.hpp"
#include "whatif/telea.hpp"

namespace whatif {

enum class Algorithm { telea, patchmatch };

std::string_view to_string(Algorithm a);
/// Throws ApiError(400) for unknown names.
Algorithm parse_algorithm(std::string_view name);

struct InpaintParams {
    int radius = kDefaultTeleaRadius;
    PatchMatchParams patchmatch;
};

/// One mutation of a session image. Together with the original image, the
/// ordered list of records reproduces the current image exactly.
struct EditRecord {
    Mask mask;
    Algorithm algorithm = Algorithm::telea;
    InpaintParams params;
};

/// Applies a single edit; a pure function of its inputs.
ImageBuffer apply_edit(const ImageBuffer& img, const EditRecord& edit);

/// Failure with the HTTP status it maps to.
class ApiError : public std::runtime_error {
  public:
    ApiError(int status, std::string kind, const std::string& detail)
        : std::runtime_error(detail), status_(status), kind_(std::move(kind)) {}
    int status() const noexcept { return status_; }
    const std::string& kind() const noexcept { return kind_; }

  private:
    int status_;
    std::string kind_;
};

enum class BusyPolicy {
    wait,   // a second mutation on the same session blocks until the first finishes
    reject, // ... or fails immediately with 409
};

struct ServiceConfig {
    std::chrono::seconds session_ttl{30 * 60};
    std::size_t history_cap = 20;
    int max_image_dim = 2048;
    int top_k = kDefaultTopK;
    BusyPolicy busy_policy = BusyPolicy::wait;
};

struct SessionSnapshot {
    ImageBuffer original;
    std::vector<EditRecord> edits;
};

/// Rebuilds the current image of a snapshot by replaying its edits.
ImageBuffer replay(const SessionSnapshot& snapshot);

void save_snapshot(const SessionSnapshot& snapshot, const std::filesystem::path& path);
SessionSnapshot load_snapshot(const std::filesystem::path& path);

struct SessionState {
    std::string id;
    int width = 0;
    int height = 0;
    ImageBuffer original;
    ImageBuffer current;
    ClassScores original_scores;
    ClassScores current_scores;
    std::size_t history_depth = 0;
};

struct EditResult {
    ImageBuffer image;
    ClassScores scores;
    std::size_t history_depth = 0;
    bool history_empty = false;
};

enum class CamMode { raw, overlay };

/// In-memory sessions over one shared model. Distinct sessions proceed in
/// parallel; per session, mutations are exclusive and reads are shared.
class SessionService {
  public:
    using Clock = std::chrono::steady_clock;
    using ClockFn = std::function<Clock::time_point()>;

    SessionService(std::shared_ptr<const ModelGraph> model, ServiceConfig config = {}, ClockFn clock = {});

    struct Created {
        std::string id;
        int width = 0;
        int height = 0;
        ClassScores scores;
    };

    Created create_session(std::span<const std::uint8_t> encoded_image);
    SessionState get(const std::string& id);
    EditResult inpaint(const std::string& id, const EditRecord& edit);
    EditResult undo(const std::string& id);
    EditResult reset(const std::string& id);
    ImageBuffer cam(const std::string& id, int class_id, CamMode mode, float alpha = 0.5f);
    SessionSnapshot snapshot(const std::string& id);

    const std::vector<std::string>& labels() const noexcept { return model_->labels(); }
    const ServiceConfig& config() const noexcept { return config_; }
    std::size_t session_count();
    /// Drops sessions idle for longer than the TTL; returns how many were removed.
    std::size_t evict_expired();

  private:
    struct Step {
        ImageBuffer image;
        ClassScores scores;
    };
    struct Session {
        std::string id;
        ImageBuffer original;
        ClassScores original_scores;
        ImageBuffer current;
        ClassScores current_scores;
        std::deque<Step> history;
        std::vector<EditRecord> edits;
        std::shared_mutex mutex;
    };
    struct Entry {
        std::shared_ptr<Session> session;
        Clock::time_point last_used;
    };

    std::shared_ptr<Session> find(const std::string& id);
    std::unique_lock<std::shared_mutex> lock_for_mutation(Session& s);
    std::size_t evict_locked(Clock::time_point now);

    std::shared_ptr<const ModelGraph> model_;
    ServiceConfig config_;
    ClockFn clock_;
    std::mutex sessions_mutex_;
    std::map<std::string, Entry> sessions_;
};

} // namespace whatif
