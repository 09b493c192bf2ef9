#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "posecoach/config.hpp"
#include "posecoach/error.hpp"

using namespace posecoach;

TEST_SUITE("config") {

TEST_CASE("defaults round trip") {
    const PipelineConfig d;
    CHECK(d.assessment.window == 15);
    CHECK(d.assessment.tau_factor == 0.25);
    CHECK(d.theta == 0.6);
    const std::string text = config_to_json(d);
    CHECK(config_to_json(config_from_json(text)) == text);
    CHECK(config_to_json(config_from_json("{}")) == text);
}

TEST_CASE("fields are read") {
    const PipelineConfig c = config_from_json(R"({
        "window": 9, "tau": 0.02, "strategy": "transition_only", "K": "auto", "K_min": 2, "K_max": 5,
        "regularization": 1e-4, "em_tolerance": 1e-5, "em_max_iterations": 50, "margin_std_factor": 2,
        "min_margin": 1, "error_score_threshold": 60, "theta": 0.8, "svm_C": 3,
        "part_weights": {"LeftArm": 2.0}})");
    CHECK(c.assessment.window == 9);
    REQUIRE(c.assessment.tau);
    CHECK(*c.assessment.tau == 0.02);
    CHECK(c.assessment.strategy == SegmentationStrategy::TransitionOnly);
    CHECK(c.k_auto);
    CHECK(c.k_min == 2);
    CHECK(c.k_max == 5);
    CHECK(c.em.regularization == 1e-4);
    CHECK(c.em.tolerance == 1e-5);
    CHECK(c.em.max_iterations == 50);
    CHECK(c.assessment.margin_std_factor == 2.0);
    CHECK(c.assessment.min_margin == 1.0);
    CHECK(c.assessment.error_score_threshold == 60.0);
    CHECK(c.theta == 0.8);
    CHECK(c.svm_c == 3.0);
    CHECK(c.assessment.part_weights.at("LeftArm") == 2.0);

    const PipelineConfig k = config_from_json(R"({"K": 4, "tau": null})", c);
    CHECK_FALSE(k.k_auto);
    CHECK(k.em.k == 4);
    CHECK_FALSE(k.assessment.tau);
    CHECK(k.theta == 0.8);
}

TEST_CASE("bad configs are usage errors") {
    for (const char* text : {R"({"windw": 3})", R"({"window": 1})", R"({"tau": -1})", R"({"K": "many"})",
                             R"({"K": 0})", R"({"K_min": 5, "K_max": 3})", R"({"theta": 1.5})", R"({"svm_C": 0})",
                             R"({"strategy": "fancy"})", R"({"window": "big"})", R"({"part_weights": {"Spine": -1}})",
                             "[1, 2]", "{"}) {
        CAPTURE(text);
        CHECK_THROWS_AS(config_from_json(text), UsageError);
    }
}

TEST_CASE("config files") {
    const auto dir = std::filesystem::temp_directory_path() / "posecoach_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "good.json") << R"({"window": 7})";
        std::ofstream(dir / "bad.json") << R"({"window": 0})";
    }
    CHECK(load_config(dir / "good.json").assessment.window == 7);
    try {
        load_config(dir / "bad.json");
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("bad.json") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config(dir / "missing.json"), UsageError);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
