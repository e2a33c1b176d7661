#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "service_fixture.hpp"
#include "whatif/cam.hpp"
#include "whatif/encoding.hpp"
#include "whatif/error.hpp"

using namespace whatif;

namespace {

int status_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ApiError& e) {
        return e.status();
    }
    return 200;
}

EditRecord telea_edit(const Mask& m, int radius = 5) {
    EditRecord e{m, Algorithm::telea, {}};
    e.params.radius = radius;
    return e;
}

bool valid_scores(const ClassScores& s) {
    double total = 0;
    for (double p : s.distribution) {
        if (p < 0 || p > 1) return false;
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-5) return false;
    for (std::size_t i = 0; i < s.topk.size(); ++i) {
        if (s.topk[i].probability != s.distribution[static_cast<std::size_t>(s.topk[i].class_id)]) return false;
        if (i > 0 && s.topk[i - 1].probability < s.topk[i].probability) return false;
    }
    return true;
}

} // namespace

TEST_CASE("service: create, get and error statuses") {
    SessionService svc(toy_model());
    const auto created = svc.create_session(fixture_png());
    CHECK(created.width == 48);
    CHECK(created.height == 40);
    CHECK(created.id.size() >= 22); // 128 bits of base64url
    CHECK(created.scores.topk.size() == 5);
    CHECK(valid_scores(created.scores));
    CHECK(svc.create_session(fixture_png()).id != created.id);

    const SessionState st = svc.get(created.id);
    CHECK(st.original == st.current);
    CHECK(st.history_depth == 0);

    const Bytes junk{1, 2, 3, 4, 5};
    CHECK(status_of([&] { svc.create_session(junk); }) == 400);
    CHECK(status_of([&] { svc.get("nope"); }) == 404);
    CHECK(status_of([&] { svc.undo("nope"); }) == 404);
    CHECK(status_of([&] { svc.inpaint(created.id, telea_edit(Mask(10, 10))); }) == 400);
    CHECK(status_of([&] { svc.inpaint(created.id, telea_edit(Mask(48, 40, true))); }) == 422);
    CHECK(status_of([&] { svc.cam(created.id, 10, CamMode::overlay); }) == 400);
    CHECK(status_of([&] { parse_algorithm("magic"); }) == 400);

    const Bytes big = encode_image(ImageBuffer(4096, 4096, 1));
    CHECK(status_of([&] { svc.create_session(big); }) == 413);
}

TEST_CASE("service: empty mask leaves image and scores unchanged") {
    SessionService svc(toy_model());
    const auto id = svc.create_session(fixture_png()).id;
    const EditResult r = svc.inpaint(id, telea_edit(Mask(48, 40)));
    const SessionState st = svc.get(id);
    CHECK(r.image == st.original);
    CHECK(r.scores.distribution == st.original_scores.distribution);
    CHECK(r.history_depth == 1);
}

TEST_CASE("service: undo discipline") {
    SessionService svc(toy_model());
    const auto id = svc.create_session(fixture_png()).id;
    const ImageBuffer original = svc.get(id).original;

    const EditResult fresh = svc.undo(id);
    CHECK(fresh.history_empty);
    CHECK(fresh.image == original);

    const EditResult one = svc.inpaint(id, telea_edit(fixture_mask()));
    CHECK_FALSE(one.image == original);
    CHECK(valid_scores(one.scores));
    CHECK(svc.undo(id).image == original);

    svc.inpaint(id, telea_edit(fixture_mask()));
    svc.inpaint(id, {oracle::rect_mask(48, 40, 2, 2, 6, 6), Algorithm::patchmatch, {}});
    svc.inpaint(id, telea_edit(oracle::disk_mask(48, 40, 30, 20, 5), 3));
    CHECK(svc.get(id).history_depth == 3);
    svc.undo(id);
    svc.undo(id);
    const EditResult last = svc.undo(id);
    CHECK(last.image == original);
    CHECK(last.history_depth == 0);
    CHECK(svc.get(id).current_scores.distribution == svc.get(id).original_scores.distribution);
}

TEST_CASE("service: history cap drops the oldest entries") {
    ServiceConfig cfg;
    cfg.history_cap = 2;
    SessionService svc(toy_model(), cfg);
    const auto id = svc.create_session(fixture_png()).id;
    const ImageBuffer first = svc.inpaint(id, telea_edit(oracle::rect_mask(48, 40, 1, 1, 4, 4))).image;
    svc.inpaint(id, telea_edit(oracle::rect_mask(48, 40, 10, 10, 4, 4)));
    svc.inpaint(id, telea_edit(oracle::rect_mask(48, 40, 20, 20, 4, 4)));
    CHECK(svc.get(id).history_depth == 2);
    svc.undo(id);
    const EditResult r = svc.undo(id);
    CHECK(r.image == first);
    CHECK(svc.undo(id).history_empty);
    CHECK(svc.get(id).current == first);
    // the edit log still reproduces the current image
    CHECK(replay(svc.snapshot(id)) == first);
}

TEST_CASE("service: reset returns to the original") {
    SessionService svc(toy_model());
    const auto id = svc.create_session(fixture_png()).id;
    svc.inpaint(id, telea_edit(fixture_mask()));
    const EditResult r = svc.reset(id);
    CHECK(r.image == svc.get(id).original);
    CHECK(r.history_depth == 0);
    CHECK(svc.snapshot(id).edits.empty());
}

TEST_CASE("service: replay and snapshot round trip") {
    SessionService svc(toy_model());
    const auto id = svc.create_session(fixture_png()).id;
    EditRecord pm{oracle::disk_mask(48, 40, 12, 12, 4), Algorithm::patchmatch, {}};
    pm.params.patchmatch.rng_seed = 99;
    pm.params.patchmatch.patch_size = 5;
    svc.inpaint(id, telea_edit(fixture_mask()));
    svc.inpaint(id, pm);
    svc.inpaint(id, telea_edit(oracle::rect_mask(48, 40, 35, 5, 6, 10), 2));
    svc.undo(id);
    svc.inpaint(id, telea_edit(oracle::rect_mask(48, 40, 5, 30, 8, 5), 7));

    const SessionSnapshot snap = svc.snapshot(id);
    CHECK(snap.edits.size() == 3);
    const ImageBuffer current = svc.get(id).current;
    CHECK(replay(snap) == current);

    const auto path = std::filesystem::temp_directory_path() / "whatif_snapshot_test.json";
    save_snapshot(snap, path);
    const SessionSnapshot loaded = load_snapshot(path);
    std::filesystem::remove(path);
    CHECK(loaded.original == snap.original);
    REQUIRE(loaded.edits.size() == snap.edits.size());
    CHECK(loaded.edits[1].params.patchmatch.rng_seed == 99);
    CHECK(loaded.edits[1].params.patchmatch.patch_size == 5);
    CHECK(loaded.edits[1].mask == snap.edits[1].mask);
    CHECK(replay(loaded) == current);
}

TEST_CASE("service: concurrent sessions stay isolated") {
    SessionService svc(toy_model());
    constexpr int kSessions = 8;
    Xoshiro256 rng(31);
    std::vector<ImageBuffer> originals;
    std::vector<std::string> ids;
    for (int i = 0; i < kSessions; ++i) {
        originals.push_back(oracle::random_image(rng, 40 + i, 32, 3));
        ids.push_back(svc.create_session(encode_image(originals.back())).id);
        originals.back() = svc.get(ids.back()).original; // quantized by the codec
    }
    std::vector<std::vector<EditRecord>> plans(kSessions);
    for (int i = 0; i < kSessions; ++i)
        for (int k = 0; k < 4; ++k)
            plans[static_cast<std::size_t>(i)].push_back(
                telea_edit(oracle::disk_mask(40 + i, 32, 8 + 6 * k, 10 + i, 3 + k % 2), 1 + (i + k) % 4));

    std::atomic<int> failures{0};
    std::vector<std::thread> workers;
    for (int i = 0; i < kSessions; ++i) {
        workers.emplace_back([&, i] {
            const auto& id = ids[static_cast<std::size_t>(i)];
            const auto& plan = plans[static_cast<std::size_t>(i)];
            ImageBuffer expect = originals[static_cast<std::size_t>(i)];
            std::vector<ImageBuffer> stack;
            for (std::size_t k = 0; k < plan.size(); ++k) {
                stack.push_back(expect);
                expect = apply_edit(expect, plan[k]);
                if (!(svc.inpaint(id, plan[k]).image == expect)) ++failures;
                if (k % 2 == 1) {
                    expect = stack.back();
                    stack.pop_back();
                    if (!(svc.undo(id).image == expect)) ++failures;
                }
                std::this_thread::yield();
                if (!(svc.get(id).current == expect)) ++failures;
            }
        });
    }
    for (auto& t : workers) t.join();
    CHECK(failures.load() == 0);
    for (int i = 0; i < kSessions; ++i) {
        const auto snap = svc.snapshot(ids[static_cast<std::size_t>(i)]);
        CHECK(snap.original == originals[static_cast<std::size_t>(i)]);
        CHECK(replay(snap) == svc.get(ids[static_cast<std::size_t>(i)]).current);
    }
}

TEST_CASE("service: busy policies") {
    Xoshiro256 rng(3);
    const Bytes big = encode_image(oracle::random_image(rng, 320, 320, 3));
    const Mask slow_mask = oracle::disk_mask(320, 320, 160, 160, 60);

    SUBCASE("reject answers 409 while a mutation runs") {
        ServiceConfig cfg;
        cfg.busy_policy = BusyPolicy::reject;
        SessionService svc(toy_model(), cfg);
        const auto id = svc.create_session(big).id;
        std::atomic<bool> done{false};
        std::thread slow([&] {
            // the poller below can grab the lock first, then we are the one rejected
            while (status_of([&] { svc.inpaint(id, {slow_mask, Algorithm::patchmatch, {}}); }) == 409) {
            }
            done = true;
        });
        bool saw_busy = false;
        while (!done && !saw_busy) {
            saw_busy = status_of([&] { svc.undo(id); }) == 409;
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
        slow.join();
        CHECK(saw_busy);
    }
    SUBCASE("wait serializes both mutations") {
        SessionService svc(toy_model());
        const auto id = svc.create_session(big).id;
        std::thread a([&] { svc.inpaint(id, telea_edit(slow_mask)); });
        std::thread b([&] { svc.inpaint(id, telea_edit(oracle::rect_mask(320, 320, 5, 5, 20, 20))); });
        a.join();
        b.join();
        CHECK(svc.get(id).history_depth == 2);
        CHECK(replay(svc.snapshot(id)) == svc.get(id).current);
    }
}

TEST_CASE("service: idle sessions expire") {
    auto now = SessionService::Clock::now();
    ServiceConfig cfg;
    cfg.session_ttl = std::chrono::minutes(30);
    SessionService svc(toy_model(), cfg, [&] { return now; });
    const auto a = svc.create_session(fixture_png()).id;
    now += std::chrono::minutes(20);
    const auto b = svc.create_session(fixture_png()).id;
    now += std::chrono::minutes(15);
    CHECK(svc.evict_expired() == 1);
    CHECK(status_of([&] { svc.get(a); }) == 404);
    CHECK(status_of([&] { svc.get(b); }) == 200);
    now += std::chrono::minutes(29);
    CHECK(status_of([&] { svc.get(b); }) == 200); // touched by the previous get
    now += std::chrono::minutes(31);
    CHECK(status_of([&] { svc.get(b); }) == 404);
    CHECK(svc.session_count() == 0);
}

TEST_CASE("service: cam modes") {
    SessionService svc(toy_model());
    const auto id = svc.create_session(fixture_png()).id;
    const ImageBuffer raw = svc.cam(id, 3, CamMode::raw);
    CHECK(raw.channels() == 1);
    CHECK(raw.width() == 48);
    CHECK(svc.cam(id, 3, CamMode::overlay, 0.0f) == svc.get(id).current);
    const ImageBuffer before = svc.cam(id, 5, CamMode::overlay);
    svc.inpaint(id, telea_edit(Mask(48, 40)));
    CHECK(svc.cam(id, 5, CamMode::overlay) == before);
    svc.inpaint(id, telea_edit(fixture_mask()));
    const ImageBuffer current = svc.get(id).current;
    CHECK(svc.cam(id, 5, CamMode::overlay) == render_overlay(compute_cam(*toy_model(), current, 5), current));
}

TEST_CASE("encoding: base64 and tokens") {
    const std::vector<std::uint8_t> bytes{0, 1, 2, 250, 251, 252, 253};
    const std::string enc = base64_encode(bytes);
    CHECK(enc == "AAEC+vv8/Q==");
    CHECK(base64_decode(enc) == bytes);
    CHECK(base64_decode("AAEC+vv8/Q") == bytes);
    CHECK(base64_decode("data:image/png;base64,AAEC\n+vv8/Q==") == bytes);
    CHECK_THROWS_AS(base64_decode("A*=="), Error);
    const std::string t = random_token(16);
    CHECK(t.size() == 22);
    CHECK(t.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_") == std::string::npos);
    CHECK(random_token(16) != t);
}
