#include "whatif/http_api.hpp"

#include <charconv>
#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "whatif/codec.hpp"
#include "whatif/encoding.hpp"
#include "whatif/error.hpp"
#include "whatif/json_io.hpp"

namespace whatif {

using nlohmann::json;

namespace {

ApiResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

ApiResponse error_response(int status, const std::string& kind, const std::string& detail) {
    return json_response(status, {{"error", kind}, {"detail", detail}});
}

std::string png_base64(const ImageBuffer& img) { return base64_encode(encode_image(img)); }

json parse_body(const ApiRequest& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw ApiError(400, "bad_request", std::string("request body is not valid JSON: ") + e.what());
    }
}

std::vector<std::uint8_t> base64_field(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body[key].is_string()) {
        throw ApiError(400, "bad_request", std::string("missing base64 field '") + key + "'");
    }
    try {
        return base64_decode(body[key].get<std::string>());
    } catch (const Error& e) {
        throw ApiError(400, "decode", std::string("field '") + key + "': " + e.what());
    }
}

json edit_json(const EditResult& r) {
    return {{"image", png_base64(r.image)},
            {"scores", scores_to_json(r.scores)},
            {"history_depth", r.history_depth},
            {"history_empty", r.history_empty}};
}

int parse_int(const std::string& text, const char* what) {
    int value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size()) {
        throw ApiError(400, "bad_request", std::string("query parameter '") + what + "' must be an integer");
    }
    return value;
}

ApiResponse handle_create(SessionService& svc, const ApiRequest& req) {
    std::vector<std::uint8_t> bytes;
    if (req.content_type.starts_with("image/")) {
        bytes.assign(req.body.begin(), req.body.end());
    } else {
        bytes = base64_field(parse_body(req), "image");
    }
    const auto created = svc.create_session(bytes);
    const SessionState state = svc.get(created.id);
    return json_response(200, {{"session_id", created.id},
                               {"width", created.width},
                               {"height", created.height},
                               {"image", png_base64(state.current)},
                               {"scores", scores_to_json(created.scores)}});
}

ApiResponse handle_get(SessionService& svc, const std::string& id) {
    const SessionState s = svc.get(id);
    return json_response(200, {{"session_id", s.id},
                               {"width", s.width},
                               {"height", s.height},
                               {"history_depth", s.history_depth},
                               {"original_image", png_base64(s.original)},
                               {"image", png_base64(s.current)},
                               {"original_scores", scores_to_json(s.original_scores)},
                               {"scores", scores_to_json(s.current_scores)}});
}

ApiResponse handle_inpaint(SessionService& svc, const std::string& id, const ApiRequest& req) {
    const json body = parse_body(req);
    const auto mask_png = base64_field(body, "mask");
    EditRecord edit;
    try {
        edit.mask = mask_from_image(decode_image(mask_png));
    } catch (const Error& e) {
        throw ApiError(400, std::string(to_string(e.code())), std::string("mask: ") + e.what());
    }
    if (!body.contains("algorithm") || !body["algorithm"].is_string()) {
        throw ApiError(400, "bad_request", "missing string field 'algorithm'");
    }
    edit.algorithm = parse_algorithm(body["algorithm"].get<std::string>());
    edit.params = params_from_json(body.contains("params") ? body["params"] : json());
    return json_response(200, edit_json(svc.inpaint(id, edit)));
}

ApiResponse handle_cam(SessionService& svc, const std::string& id, const ApiRequest& req) {
    auto cls = req.query.find("class");
    if (cls == req.query.end()) throw ApiError(400, "bad_request", "missing query parameter 'class'");
    const int class_id = parse_int(cls->second, "class");
    CamMode mode = CamMode::overlay;
    if (auto m = req.query.find("mode"); m != req.query.end()) {
        if (m->second == "raw") {
            mode = CamMode::raw;
        } else if (m->second != "overlay") {
            throw ApiError(400, "bad_request", "mode must be 'raw' or 'overlay'");
        }
    }
    float alpha = 0.5f;
    if (auto a = req.query.find("alpha"); a != req.query.end()) {
        try {
            std::size_t used = 0;
            alpha = std::stof(a->second, &used);
            if (used != a->second.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ApiError(400, "bad_request", "alpha must be a number");
        }
    }
    const Bytes png = encode_image(svc.cam(id, class_id, mode, alpha));
    return {200, "image/png", std::string(png.begin(), png.end())};
}

} // namespace

ApiResponse Api::handle(const ApiRequest& req) {
    static const std::regex kSession(R"(^/api/session/([A-Za-z0-9_-]+)(/(inpaint|undo|reset|cam))?/?$)");
    try {
        if (req.path == "/api/labels" || req.path == "/api/labels/") {
            if (req.method != "GET") return error_response(405, "method_not_allowed", "use GET");
            return json_response(200, {{"labels", service_.labels()}});
        }
        if (req.path == "/api/session" || req.path == "/api/session/") {
            if (req.method != "POST") return error_response(405, "method_not_allowed", "use POST");
            return handle_create(service_, req);
        }
        std::smatch m;
        if (std::regex_match(req.path, m, kSession)) {
            const std::string id = m[1];
            const std::string action = m[3];
            const std::string want = action.empty() || action == "cam" ? "GET" : "POST";
            if (req.method != want) return error_response(405, "method_not_allowed", "use " + want);
            if (action.empty()) return handle_get(service_, id);
            if (action == "inpaint") return handle_inpaint(service_, id, req);
            if (action == "undo") return json_response(200, edit_json(service_.undo(id)));
            if (action == "reset") return json_response(200, edit_json(service_.reset(id)));
            return handle_cam(service_, id, req);
        }
        return error_response(404, "not_found", "no route for " + req.method + " " + req.path);
    } catch (const ApiError& e) {
        return error_response(e.status(), e.kind(), e.what());
    } catch (const Error& e) {
        return error_response(500, std::string(to_string(e.code())), e.what());
    }
}

struct HttpServer::Impl {
    SessionService& service;
    Api api;
    httplib::Server server;

    explicit Impl(SessionService& s) : service(s), api(s) {}
};

HttpServer::HttpServer(SessionService& service, std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>(service)) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest ar{req.method, req.path, {}, req.get_header_value("Content-Type"), req.body};
        for (const auto& [k, v] : req.params) ar.query.emplace(k, v);
        const ApiResponse out = impl_->api.handle(ar);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    const std::string pattern = R"(/api/.*)";
    impl_->server.Get(pattern, forward);
    impl_->server.Post(pattern, forward);
    impl_->server.Put(pattern, forward);
    impl_->server.Delete(pattern, forward);
    impl_->server.set_payload_max_length(64u << 20);
    if (!static_dir.empty()) {
        if (!impl_->server.set_mount_point("/", static_dir.string())) {
            throw Error(Errc::io, "static directory not found: " + static_dir.string());
        }
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) throw Error(Errc::io, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

} // namespace whatif
