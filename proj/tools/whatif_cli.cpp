// Command-line front end: classify, inpaint, cam, bench, serve.
// Exit codes: 0 success, 1 domain error, 2 usage or I/O error.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "whatif/bench.hpp"
#include "whatif/cam.hpp"
#include "whatif/classifier.hpp"
#include "whatif/codec.hpp"
#include "whatif/error.hpp"
#include "whatif/http_api.hpp"
#include "whatif/patchmatch.hpp"
#include "whatif/service.hpp"
#include "whatif/telea.hpp"

namespace {

using namespace whatif;
using nlohmann::json;

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_classify(const std::string& model_path, const std::string& image_path, int k) {
    const ModelGraph model = load_model_file(model_path);
    const ImageBuffer img = decode_image(read_file(image_path));
    const ClassScores scores = classify(model, img, k);
    json rows = json::array();
    for (const auto& s : scores.topk) {
        rows.push_back({{"class_id", s.class_id}, {"label", s.label}, {"probability", s.probability}});
    }
    std::cout << json{{"topk", rows}}.dump(2) << "\n";
    return 0;
}

int cmd_inpaint(const std::string& image_path, const std::string& mask_path, const std::string& algorithm,
                const std::string& out_path, const InpaintParams& params) {
    const ImageBuffer img = decode_image(read_file(image_path));
    const Mask mask = mask_from_image(decode_image(read_file(mask_path)));
    EditRecord edit{mask, parse_algorithm(algorithm), params};
    write_file(out_path, encode_image(apply_edit(img, edit)));
    return 0;
}

int cmd_cam(const std::string& model_path, const std::string& image_path, int class_id, const std::string& mode,
            float alpha, const std::string& out_path) {
    const ModelGraph model = load_model_file(model_path);
    const ImageBuffer img = decode_image(read_file(image_path));
    const CamHeatmap heat = compute_cam(model, img, class_id);
    if (mode == "raw") {
        ImageBuffer gray(heat.upsampled.width, heat.upsampled.height, 1);
        auto d = gray.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(heat.upsampled.values[i]);
        write_file(out_path, encode_image(gray));
    } else {
        write_file(out_path, encode_image(render_overlay(heat, img, alpha)));
    }
    return 0;
}

int cmd_bench(const std::string& suite, const std::string& model_path) {
    std::optional<ModelGraph> model;
    if (!model_path.empty()) model = load_model_file(model_path);
    const BenchReport report = run_bench(suite, model ? &*model : nullptr);
    std::cout << report.to_json() << "\n";
    for (const auto& s : report.stats) {
        if (!s.within_budget()) {
            std::cerr << "warning: " << s.op << " median " << s.median_ms << " ms exceeds budget " << *s.budget_ms
                      << " ms\n";
        }
    }
    return 0;
}

int cmd_serve(const std::string& model_path, const std::string& host, int port, const ServiceConfig& config,
              const std::string& static_dir) {
    auto model = std::make_shared<const ModelGraph>(load_model_file(model_path));
    SessionService service(model, config);
    HttpServer server(service, static_dir);
    const int bound = server.bind(host, port);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "serving " << model->num_classes() << "-class model on http://" << host << ":" << bound << "\n";
    server.serve();
    g_server = nullptr;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interactive inpainting and classification workbench"};
    app.require_subcommand(1);

    std::string model_path, image_path, mask_path, out_path;
    std::string algorithm = "telea";
    int k = kDefaultTopK;

    auto* classify_cmd = app.add_subcommand("classify", "Print the top-k classes for an image as JSON");
    classify_cmd->add_option("-m,--model", model_path, "Model manifest (JSON)")->required()->envname("WHATIF_MODEL");
    classify_cmd->add_option("-i,--image", image_path, "PNG or JPEG image")->required();
    classify_cmd->add_option("-k,--top", k, "Rows to print")->check(CLI::PositiveNumber);

    InpaintParams params;
    std::uint64_t seed = 0;
    auto* inpaint_cmd = app.add_subcommand("inpaint", "Fill the masked region of an image");
    inpaint_cmd->add_option("-i,--image", image_path, "PNG or JPEG image")->required();
    inpaint_cmd->add_option("--mask", mask_path, "Single-channel PNG; pixels > 0.5 are filled")->required();
    inpaint_cmd->add_option("-a,--algorithm", algorithm, "telea or patchmatch")
        ->check(CLI::IsMember({"telea", "patchmatch"}));
    inpaint_cmd->add_option("-o,--out", out_path, "Output PNG")->required();
    inpaint_cmd->add_option("--seed", seed, "PatchMatch RNG seed");
    inpaint_cmd->add_option("--radius", params.radius, "Telea neighborhood radius")->check(CLI::PositiveNumber);
    inpaint_cmd->add_option("--patch-size", params.patchmatch.patch_size, "PatchMatch patch size (odd)");
    inpaint_cmd->add_option("--iterations", params.patchmatch.iterations, "PatchMatch rounds per level");
    inpaint_cmd->add_option("--pyramid-min", params.patchmatch.pyramid_min, "Smallest pyramid side");

    int class_id = 0;
    std::string cam_mode = "overlay";
    float alpha = 0.5f;
    auto* cam_cmd = app.add_subcommand("cam", "Write a class activation map as PNG");
    cam_cmd->add_option("-m,--model", model_path, "Model manifest (JSON)")->required()->envname("WHATIF_MODEL");
    cam_cmd->add_option("-i,--image", image_path, "PNG or JPEG image")->required();
    cam_cmd->add_option("-c,--class", class_id, "Class index")->required();
    cam_cmd->add_option("--mode", cam_mode, "overlay or raw")->check(CLI::IsMember({"overlay", "raw"}));
    cam_cmd->add_option("--alpha", alpha, "Overlay opacity")->check(CLI::Range(0.0f, 1.0f));
    cam_cmd->add_option("-o,--out", out_path, "Output PNG")->required();

    std::string suite = "quick";
    auto* bench_cmd = app.add_subcommand("bench", "Report median/p95 latency per operation as JSON");
    bench_cmd->add_option("-s,--suite", suite, "quick or standard")->check(CLI::IsMember({"quick", "standard"}));
    bench_cmd->add_option("-m,--model", model_path, "Model manifest; defaults to a synthetic SqueezeNet");

    std::string host = "127.0.0.1";
    int port = 8080;
    long ttl_seconds = 30 * 60;
    std::size_t history_cap = 20;
    int max_dim = 2048;
    std::string busy = "wait";
    std::string static_dir;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("-m,--model", model_path, "Model manifest (JSON)")->required()->envname("WHATIF_MODEL");
    serve_cmd->add_option("--host", host, "Bind address")->envname("WHATIF_HOST");
    serve_cmd->add_option("-p,--port", port, "Port (0 picks a free one)")->envname("WHATIF_PORT");
    serve_cmd->add_option("--session-ttl", ttl_seconds, "Idle seconds before a session is dropped")
        ->envname("WHATIF_SESSION_TTL")
        ->check(CLI::PositiveNumber);
    serve_cmd->add_option("--history-cap", history_cap, "Undo depth per session")->envname("WHATIF_HISTORY_CAP");
    serve_cmd->add_option("--max-image-dim", max_dim, "Largest accepted image side")
        ->envname("WHATIF_MAX_IMAGE_DIM")
        ->check(CLI::PositiveNumber);
    serve_cmd->add_option("--busy", busy, "Concurrent edits on one session: wait or reject (409)")
        ->envname("WHATIF_BUSY_POLICY")
        ->check(CLI::IsMember({"wait", "reject"}));
    serve_cmd->add_option("--static", static_dir, "Directory served at / (web UI assets)")->envname("WHATIF_STATIC_DIR");
    serve_cmd->set_config("--config", "", "TOML/INI file with any of the options above");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*classify_cmd) return cmd_classify(model_path, image_path, k);
        if (*inpaint_cmd) {
            params.patchmatch.rng_seed = seed;
            return cmd_inpaint(image_path, mask_path, algorithm, out_path, params);
        }
        if (*cam_cmd) return cmd_cam(model_path, image_path, class_id, cam_mode, alpha, out_path);
        if (*bench_cmd) return cmd_bench(suite, model_path);
        if (*serve_cmd) {
            ServiceConfig config;
            config.session_ttl = std::chrono::seconds(ttl_seconds);
            config.history_cap = history_cap;
            config.max_image_dim = max_dim;
            config.busy_policy = busy == "reject" ? BusyPolicy::reject : BusyPolicy::wait;
            return cmd_serve(model_path, host, port, config, static_dir);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == Errc::io ? kExitUsage : kExitDomain;
    } catch (const ApiError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitUsage;
}
