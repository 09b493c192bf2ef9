#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "posecoach/alignment.hpp"
#include "posecoach/assessment.hpp"
#include "posecoach/movement_model.hpp"
#include "posecoach/synth.hpp"

using namespace posecoach;

namespace {

PoseSequence demo(Archetype a, std::uint64_t seed, double duration) {
    SynthSpec s;
    s.archetype = a;
    s.seed = seed;
    s.noise = 0.01;
    s.variation = 0.05;
    s.duration = duration;
    return to_pose_sequence(synthesize(s).sequence, JointSet::upper_body());
}

void BM_GeodesicDistance(benchmark::State& state) {
    const PoseSequence s = demo(Archetype::ArmRaiseRotate, 1, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(geodesic_distance(s.poses[0], s.poses[20]));
}
BENCHMARK(BM_GeodesicDistance);

void BM_KarcherMean(benchmark::State& state) {
    const PoseSequence s = demo(Archetype::ArmUpLean, 2, 10.0);
    const std::vector<HumanPose> pts(s.poses.begin(), s.poses.begin() + state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(karcher_mean(pts));
}
BENCHMARK(BM_KarcherMean)->Arg(10)->Arg(100);

void BM_DtwAlign(benchmark::State& state) {
    const double seconds = static_cast<double>(state.range(0)) / 30.0;
    const PoseSequence a = demo(Archetype::ArmsFrontSpread, 3, seconds);
    const PoseSequence b = demo(Archetype::ArmsFrontSpread, 4, seconds);
    for (auto _ : state) benchmark::DoNotOptimize(dtw_align(a, b));
}
BENCHMARK(BM_DtwAlign)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_TrainModel(benchmark::State& state) {
    std::vector<PoseSequence> demos;
    for (int i = 0; i < 6; ++i) demos.push_back(demo(Archetype::ArmRaiseRotate, 10 + i, 5.0));
    EmConfig cfg;
    cfg.k = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(train_model(demos, cfg));
}
BENCHMARK(BM_TrainModel)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Assess(benchmark::State& state) {
    std::vector<PoseSequence> demos;
    for (int i = 0; i < 6; ++i) demos.push_back(demo(Archetype::ArmRaiseRotate, 20 + i, 10.0));
    EmConfig cfg;
    cfg.k = 6;
    Assessor as(train_model(demos, cfg), AssessmentConfig{});
    as.set_calibration(as.calibrate(demos));
    const PoseSequence probe = demo(Archetype::ArmRaiseRotate, 99, 10.0);
    for (auto _ : state) benchmark::DoNotOptimize(as.assess(probe));
}
BENCHMARK(BM_Assess)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
