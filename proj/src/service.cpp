#include "whatif/service.hpp"

#include <bit>
#include <fstream>

#include "whatif/cam.hpp"
#include "whatif/codec.hpp"
#include "whatif/encoding.hpp"
#include "whatif/error.hpp"
#include "whatif/json_io.hpp"

namespace whatif {

using nlohmann::json;

namespace {

ApiError to_api_error(const Error& e) {
    int status = 400;
    switch (e.code()) {
    case Errc::all_unknown:
    case Errc::no_source: status = 422; break;
    case Errc::io:
    case Errc::graph:
    case Errc::weight:
    case Errc::cam_incompatible:
    case Errc::shape: status = 500; break;
    default: status = 400; break;
    }
    return ApiError(status, std::string(to_string(e.code())), e.what());
}

template <typename F>
auto mapping_errors(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw to_api_error(e);
    }
}

} // namespace

std::string_view to_string(Algorithm a) { return a == Algorithm::telea ? "telea" : "patchmatch"; }

Algorithm parse_algorithm(std::string_view name) {
    if (name == "telea") return Algorithm::telea;
    if (name == "patchmatch") return Algorithm::patchmatch;
    throw ApiError(400, "unknown_algorithm", "unknown algorithm '" + std::string(name) + "' (expected telea or patchmatch)");
}

ImageBuffer apply_edit(const ImageBuffer& img, const EditRecord& edit) {
    require_same_dims(img, edit.mask);
    if (edit.mask.all()) throw Error(Errc::all_unknown, "mask covers the entire image");
    switch (edit.algorithm) {
    case Algorithm::telea: return inpaint_telea(img, edit.mask, edit.params.radius);
    case Algorithm::patchmatch: return inpaint_patchmatch(img, edit.mask, edit.params.patchmatch);
    }
    return img;
}

// ---- JSON helpers ---------------------------------------------------------

json scores_to_json(const ClassScores& scores) {
    json topk = json::array();
    for (const auto& s : scores.topk) {
        topk.push_back({{"class_id", s.class_id}, {"label", s.label}, {"probability", s.probability}});
    }
    return {{"topk", std::move(topk)}, {"distribution", scores.distribution}};
}

InpaintParams params_from_json(const json& j) {
    InpaintParams p;
    if (j.is_null()) return p;
    if (!j.is_object()) throw ApiError(400, "bad_request", "'params' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        const json& v = it.value();
        auto need_int = [&] {
            if (!v.is_number_integer()) throw ApiError(400, "bad_request", "param '" + key + "' must be an integer");
            return v.get<long long>();
        };
        if (key == "radius") {
            p.radius = static_cast<int>(need_int());
        } else if (key == "patch_size") {
            p.patchmatch.patch_size = static_cast<int>(need_int());
        } else if (key == "iterations") {
            p.patchmatch.iterations = static_cast<int>(need_int());
        } else if (key == "pyramid_min") {
            p.patchmatch.pyramid_min = static_cast<int>(need_int());
        } else if (key == "search_decay") {
            if (!v.is_number()) throw ApiError(400, "bad_request", "param 'search_decay' must be a number");
            p.patchmatch.search_decay = v.get<double>();
        } else if (key == "seed") {
            if (!v.is_number_unsigned() && !v.is_number_integer()) {
                throw ApiError(400, "bad_request", "param 'seed' must be a non-negative integer");
            }
            if (v.is_number_integer() && v.get<long long>() < 0) {
                throw ApiError(400, "bad_request", "param 'seed' must be a non-negative integer");
            }
            p.patchmatch.rng_seed = v.get<std::uint64_t>();
        } else {
            throw ApiError(400, "bad_request", "unknown param '" + key + "'");
        }
    }
    if (p.radius < 1) throw ApiError(400, "invalid_argument", "radius must be at least 1");
    mapping_errors([&] { p.patchmatch.validate(); });
    return p;
}

json params_to_json(const InpaintParams& p) {
    return {{"radius", p.radius},
            {"patch_size", p.patchmatch.patch_size},
            {"iterations", p.patchmatch.iterations},
            {"pyramid_min", p.patchmatch.pyramid_min},
            {"search_decay", p.patchmatch.search_decay},
            {"seed", p.patchmatch.rng_seed}};
}

// ---- snapshots --------------------------------------------------------------

ImageBuffer replay(const SessionSnapshot& snapshot) {
    ImageBuffer current = snapshot.original;
    for (const auto& edit : snapshot.edits) current = apply_edit(current, edit);
    return current;
}

void save_snapshot(const SessionSnapshot& snapshot, const std::filesystem::path& path) {
    const auto data = snapshot.original.data();
    std::vector<std::uint8_t> raw(data.size() * 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(data[i]);
        for (int b = 0; b < 4; ++b) raw[4 * i + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    json edits = json::array();
    for (const auto& e : snapshot.edits) {
        edits.push_back({{"mask_png", base64_encode(encode_image(mask_to_image(e.mask)))},
                         {"algorithm", std::string(to_string(e.algorithm))},
                         {"params", params_to_json(e.params)}});
    }
    const json doc = {{"format", "whatif-session"},
                      {"version", 1},
                      {"original",
                       {{"width", snapshot.original.width()},
                        {"height", snapshot.original.height()},
                        {"channels", snapshot.original.channels()},
                        {"data_f32le", base64_encode(raw)}}},
                      {"edits", std::move(edits)}};
    const std::string text = doc.dump(2);
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

SessionSnapshot load_snapshot(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
        if (doc.value("format", "") != "whatif-session" || doc.value("version", 0) != 1) {
            throw Error(Errc::decode, "not a whatif-session snapshot");
        }
        const json& o = doc.at("original");
        const auto raw = base64_decode(o.at("data_f32le").get<std::string>());
        std::vector<float> data(raw.size() / 4);
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[4 * i + static_cast<std::size_t>(b)]) << (8 * b);
            data[i] = std::bit_cast<float>(bits);
        }
        SessionSnapshot snap;
        snap.original = ImageBuffer(o.at("width").get<int>(), o.at("height").get<int>(), o.at("channels").get<int>(),
                                    std::move(data));
        for (const json& e : doc.at("edits")) {
            EditRecord rec;
            rec.mask = mask_from_image(decode_image(base64_decode(e.at("mask_png").get<std::string>())));
            rec.algorithm = parse_algorithm(e.at("algorithm").get<std::string>());
            rec.params = params_from_json(e.at("params"));
            snap.edits.push_back(std::move(rec));
        }
        return snap;
    } catch (const json::exception& e) {
        throw Error(Errc::decode, std::string("malformed snapshot: ") + e.what());
    } catch (const ApiError& e) {
        throw Error(Errc::decode, std::string("malformed snapshot: ") + e.what());
    }
}

// ---- service ----------------------------------------------------------------

SessionService::SessionService(std::shared_ptr<const ModelGraph> model, ServiceConfig config, ClockFn clock)
    : model_(std::move(model)), config_(config), clock_(clock ? std::move(clock) : ClockFn([] { return Clock::now(); })) {
    if (!model_) throw std::invalid_argument("SessionService needs a model");
}

std::size_t SessionService::evict_locked(Clock::time_point now) {
    std::size_t removed = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        if (now - it->second.last_used > config_.session_ttl) {
            it = sessions_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

std::size_t SessionService::evict_expired() {
    std::lock_guard lock(sessions_mutex_);
    return evict_locked(clock_());
}

std::size_t SessionService::session_count() {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    const auto now = clock_();
    evict_locked(now);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ApiError(404, "unknown_session", "no session '" + id + "'");
    it->second.last_used = now;
    return it->second.session;
}

std::unique_lock<std::shared_mutex> SessionService::lock_for_mutation(Session& s) {
    if (config_.busy_policy == BusyPolicy::reject) {
        std::unique_lock lock(s.mutex, std::try_to_lock);
        if (!lock.owns_lock()) throw ApiError(409, "session_busy", "another request is modifying this session");
        return lock;
    }
    return std::unique_lock(s.mutex);
}

SessionService::Created SessionService::create_session(std::span<const std::uint8_t> encoded_image) {
    ImageBuffer img = mapping_errors([&] { return decode_image(encoded_image); });
    if (img.width() > config_.max_image_dim || img.height() > config_.max_image_dim) {
        throw ApiError(413, "image_too_large",
                       "image is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                           ", limit is " + std::to_string(config_.max_image_dim) + " per side");
    }
    auto session = std::make_shared<Session>();
    session->original_scores = mapping_errors([&] { return classify(*model_, img, config_.top_k); });
    session->current_scores = session->original_scores;
    session->original = img;
    session->current = std::move(img);

    Created created{"", session->original.width(), session->original.height(), session->original_scores};
    std::lock_guard lock(sessions_mutex_);
    const auto now = clock_();
    evict_locked(now);
    do {
        session->id = random_token(16);
    } while (sessions_.count(session->id));
    created.id = session->id;
    sessions_.emplace(created.id, Entry{std::move(session), now});
    return created;
}

SessionState SessionService::get(const std::string& id) {
    auto s = find(id);
    std::shared_lock lock(s->mutex);
    return {s->id,
            s->original.width(),
            s->original.height(),
            s->original,
            s->current,
            s->original_scores,
            s->current_scores,
            s->history.size()};
}

EditResult SessionService::inpaint(const std::string& id, const EditRecord& edit) {
    auto s = find(id);
    auto lock = lock_for_mutation(*s);
    if (edit.mask.width() != s->current.width() || edit.mask.height() != s->current.height()) {
        throw ApiError(400, "dims", "mask is " + std::to_string(edit.mask.width()) + "x" +
                                        std::to_string(edit.mask.height()) + " but the session image is " +
                                        std::to_string(s->current.width()) + "x" + std::to_string(s->current.height()));
    }
    if (edit.mask.all()) throw ApiError(422, "all_unknown", "mask covers the entire image");

    ImageBuffer next = mapping_errors([&] { return apply_edit(s->current, edit); });
    ClassScores scores = mapping_errors([&] { return classify(*model_, next, config_.top_k); });

    s->history.push_back({std::move(s->current), std::move(s->current_scores)});
    while (s->history.size() > config_.history_cap) s->history.pop_front();
    s->edits.push_back(edit);
    s->current = std::move(next);
    s->current_scores = std::move(scores);
    return {s->current, s->current_scores, s->history.size(), false};
}

EditResult SessionService::undo(const std::string& id) {
    auto s = find(id);
    auto lock = lock_for_mutation(*s);
    if (s->history.empty()) return {s->current, s->current_scores, 0, true};
    s->current = std::move(s->history.back().image);
    s->current_scores = std::move(s->history.back().scores);
    s->history.pop_back();
    s->edits.pop_back();
    return {s->current, s->current_scores, s->history.size(), s->history.empty()};
}

EditResult SessionService::reset(const std::string& id) {
    auto s = find(id);
    auto lock = lock_for_mutation(*s);
    s->history.clear();
    s->edits.clear();
    s->current = s->original;
    s->current_scores = s->original_scores;
    return {s->current, s->current_scores, 0, true};
}

ImageBuffer SessionService::cam(const std::string& id, int class_id, CamMode mode, float alpha) {
    auto s = find(id);
    std::shared_lock lock(s->mutex);
    if (!(alpha >= 0.0f && alpha <= 1.0f)) throw ApiError(400, "invalid_argument", "alpha must lie in [0, 1]");
    const CamHeatmap heat = mapping_errors([&] { return compute_cam(*model_, s->current, class_id); });
    if (mode == CamMode::overlay) return render_overlay(heat, s->current, alpha);
    ImageBuffer gray(heat.upsampled.width, heat.upsampled.height, 1);
    auto d = gray.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(heat.upsampled.values[i]);
    return gray;
}

SessionSnapshot SessionService::snapshot(const std::string& id) {
    auto s = find(id);
    std::shared_lock lock(s->mutex);
    return {s->original, s->edits};
}

} // namespace whatif
