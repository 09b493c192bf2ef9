#include "posecoach/movement_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "posecoach/alignment.hpp"
#include "posecoach/error.hpp"
#include "posecoach/gaussian.hpp"

namespace posecoach {

double frame_time(std::size_t frame, std::size_t t_ref) {
    return t_ref > 1 ? static_cast<double>(frame) / static_cast<double>(t_ref - 1) : 0.0;
}

std::vector<PoseSequence> align_demonstrations(std::span<const PoseSequence> demos) {
    if (demos.empty()) throw DataError("no demonstrations");
    const PoseSequence& reference = demos.front();
    std::vector<PoseSequence> aligned;
    aligned.reserve(demos.size());
    aligned.push_back(reference);
    for (std::size_t d = 1; d < demos.size(); ++d) {
        if (demos[d].joint_set.names() != reference.joint_set.names()) {
            throw DataError("demonstration " + std::to_string(d) + " uses a different joint set");
        }
        aligned.push_back(align_to_reference(demos[d], reference));
    }
    return aligned;
}

namespace {

/// Flattened view of the training frames.
struct Samples {
    std::vector<const HumanPose*> poses;
    std::vector<double> times;
    std::size_t size() const { return poses.size(); }
};

Samples collect(std::span<const PoseSequence> aligned) {
    Samples s;
    const std::size_t t_ref = aligned.front().size();
    for (const auto& seq : aligned) {
        if (seq.size() != t_ref) throw DataError("aligned demonstrations differ in length");
        for (std::size_t t = 0; t < seq.size(); ++t) {
            s.poses.push_back(&seq.poses[t]);
            s.times.push_back(frame_time(t, t_ref));
        }
    }
    return s;
}

/// Columns are (t - t_k, Log_{mu_k}(y)) for every sample.
Eigen::MatrixXd chart_coordinates(const MixtureComponent& c, const Samples& s) {
    const auto dim = static_cast<Eigen::Index>(1 + c.mean_pose.tangent_dim());
    Eigen::MatrixXd v(dim, static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        v(0, col) = s.times[i] - c.mean_time;
        pose_log_into(c.mean_pose, *s.poses[i], v.col(col).tail(dim - 1));
    }
    return v;
}

/// log(phi_k) + log N(x_i | component k), one row per component.
Eigen::MatrixXd weighted_log_densities(const std::vector<MixtureComponent>& comps, const Samples& s) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(comps.size()), static_cast<Eigen::Index>(s.size()));
    for (std::size_t k = 0; k < comps.size(); ++k) {
        const GaussianDensity g(comps[k].cov);
        out.row(static_cast<Eigen::Index>(k)) =
            (g.log_density_columns(chart_coordinates(comps[k], s)).array() + std::log(comps[k].weight)).transpose();
    }
    return out;
}

/// Responsibilities below this contribute less than rounding error to the
/// weighted means and covariances, so those samples are skipped in the
/// M-step.
constexpr double kNegligibleResponsibility = 1e-16;

/// Maximization for one component given its responsibilities.
MixtureComponent maximize(const Samples& s, const Eigen::VectorXd& resp, double total_points,
                          const HumanPose& init_pose, const EmConfig& config) {
    const double nk = resp.sum();
    if (!(nk > 1e-10)) throw NumericError("mixture component lost all its responsibility; reduce K");
    Samples active;
    std::vector<double> weights;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double r = resp[static_cast<Eigen::Index>(i)];
        if (r < kNegligibleResponsibility) continue;
        active.poses.push_back(s.poses[i]);
        active.times.push_back(s.times[i]);
        weights.push_back(r);
    }
    MixtureComponent c;
    c.weight = nk / total_points;
    double tsum = 0.0;
    for (std::size_t i = 0; i < active.size(); ++i) tsum += weights[i] * active.times[i];
    c.mean_time = tsum / nk;
    c.mean_pose = karcher_mean(active.poses, weights, &init_pose, config.karcher).mean;
    const Eigen::MatrixXd v = chart_coordinates(c, active);
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
    c.cov = (v * w.asDiagonal() * v.transpose()) / nk;
    c.cov = 0.5 * (c.cov + c.cov.transpose());
    c.cov.diagonal().array() += config.regularization;
    return c;
}

}  // namespace

ExerciseModel fit_mixture(std::span<const PoseSequence> aligned, const EmConfig& config) {
    if (aligned.empty()) throw DataError("no demonstrations");
    if (config.k < 1) throw DataError("K must be at least 1");
    const std::size_t t_ref = aligned.front().size();
    if (static_cast<std::size_t>(config.k) > t_ref) {
        throw DataError("K = " + std::to_string(config.k) + " exceeds the " + std::to_string(t_ref) +
                        " reference frames");
    }
    const Samples s = collect(aligned);
    const double n = static_cast<double>(s.size());
    const auto kk = static_cast<std::size_t>(config.k);

    ExerciseModel model;
    model.exercise = aligned.front().exercise;
    model.joint_set = aligned.front().joint_set;
    model.t_ref = t_ref;
    model.fps = aligned.front().fps;
    model.regularization = config.regularization;
    model.training.demo_count = aligned.size();

    // hard time-slice responsibilities for the first M-step
    model.components.resize(kk);
    for (std::size_t k = 0; k < kk; ++k) {
        Eigen::VectorXd resp = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.size()));
        const HumanPose* first = nullptr;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const std::size_t frame = i % t_ref;
            const std::size_t bin = std::min(kk - 1, frame * kk / t_ref);
            if (bin != k) continue;
            resp[static_cast<Eigen::Index>(i)] = 1.0;
            if (!first) first = s.poses[i];
        }
        model.components[k] = maximize(s, resp, n, *first, config);
    }

    double previous = -std::numeric_limits<double>::infinity();
    for (int it = 0; it <= config.max_iterations; ++it) {
        const Eigen::MatrixXd logp = weighted_log_densities(model.components, s);
        Eigen::VectorXd frame_ll(logp.cols());
        for (Eigen::Index i = 0; i < logp.cols(); ++i) frame_ll[i] = log_sum_exp(logp.col(i));
        const double ll = frame_ll.sum();
        if (!std::isfinite(ll)) throw NumericError("EM produced a non-finite log-likelihood");
        model.training.em_trace.push_back(ll);
        model.training.iterations = it;
        if (it > 0 && (ll - previous) < config.tolerance * std::abs(previous)) {
            model.training.converged = true;
            break;
        }
        if (it == config.max_iterations) break;
        previous = ll;

        const Eigen::MatrixXd resp = (logp.rowwise() - frame_ll.transpose()).array().exp().matrix();
        std::vector<MixtureComponent> next(kk);
        for (std::size_t k = 0; k < kk; ++k) {
            next[k] = maximize(s, resp.row(static_cast<Eigen::Index>(k)).transpose(), n,
                               model.components[k].mean_pose, config);
        }
        double wsum = 0.0;
        for (const auto& c : next) wsum += c.weight;
        for (auto& c : next) c.weight /= wsum;
        model.components = std::move(next);
    }
    return model;
}

ExerciseModel train_model(std::span<const PoseSequence> demos, const EmConfig& config) {
    if (demos.size() < 2) throw DataError("need ≥ 2 demonstrations");
    const std::vector<PoseSequence> aligned = align_demonstrations(demos);
    return fit_mixture(aligned, config);
}

double bic(const ExerciseModel& model, std::span<const PoseSequence> aligned) {
    double ll = 0.0;
    for (const auto& seq : aligned) ll += sequence_loglik(model, seq).total;
    const double d = static_cast<double>(model.dim());
    const double k = static_cast<double>(model.k());
    const double params = (k - 1.0) + k * (d + d * (d + 1.0) / 2.0);
    double n = 0.0;
    for (const auto& seq : aligned) n += static_cast<double>(seq.size());
    return -2.0 * ll + params * std::log(n);
}

ExerciseModel train_model_bic(std::span<const PoseSequence> demos, EmConfig config, int k_min, int k_max) {
    if (demos.size() < 2) throw DataError("need ≥ 2 demonstrations");
    if (k_min < 1 || k_max < k_min) throw DataError("invalid K range for BIC selection");
    const std::vector<PoseSequence> aligned = align_demonstrations(demos);
    ExerciseModel best;
    double best_bic = std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
        if (static_cast<std::size_t>(k) > aligned.front().size()) break;
        config.k = k;
        ExerciseModel m = fit_mixture(aligned, config);
        const double score = bic(m, aligned);
        if (score < best_bic) {
            best_bic = score;
            best = std::move(m);
        }
    }
    return best;
}

PoseSequence IdealMovement::as_sequence(const ExerciseModel& model) const {
    PoseSequence seq;
    seq.exercise = model.exercise;
    seq.subject = "ideal";
    seq.fps = model.fps;
    seq.joint_set = model.joint_set;
    seq.poses = poses;
    for (double t : times) seq.timestamps.push_back(t * static_cast<double>(model.t_ref > 1 ? model.t_ref - 1 : 0) / model.fps);
    return hemisphere_align(std::move(seq));
}

IdealMovement gmr_generate(const ExerciseModel& model, std::span<const double> times) {
    if (model.components.empty()) throw DataError("model has no components");
    const std::size_t kk = model.k();
    const auto pose_dim = static_cast<Eigen::Index>(model.dim() - 1);

    // per-component regression pieces, independent of t
    struct Regressor {
        Eigen::VectorXd gain;     // Sigma_yt / Sigma_tt
        Eigen::MatrixXd cond_cov; // Sigma_yy - Sigma_yt Sigma_ty / Sigma_tt
        double var_t;
    };
    std::vector<Regressor> reg(kk);
    for (std::size_t k = 0; k < kk; ++k) {
        const auto& c = model.components[k];
        reg[k].var_t = c.cov(0, 0);
        reg[k].gain = c.cov.col(0).tail(pose_dim) / reg[k].var_t;
        reg[k].cond_cov = c.cov.bottomRightCorner(pose_dim, pose_dim) -
                          reg[k].gain * c.cov.row(0).tail(pose_dim);
    }

    IdealMovement out;
    out.times.assign(times.begin(), times.end());
    out.poses.reserve(times.size());
    out.covariances.reserve(times.size());
    std::vector<HumanPose> cond_means(kk);
    std::vector<const HumanPose*> ptrs(kk);
    Eigen::VectorXd logh(static_cast<Eigen::Index>(kk));
    for (double t : times) {
        if (!(t >= -1e-12 && t <= 1.0 + 1e-12)) {
            throw DataError("timestamp " + std::to_string(t) + " is outside the trained range [0, 1]");
        }
        for (std::size_t k = 0; k < kk; ++k) {
            const auto& c = model.components[k];
            const double dt = t - c.mean_time;
            logh[static_cast<Eigen::Index>(k)] =
                std::log(c.weight) - 0.5 * (std::log(2.0 * std::numbers::pi * reg[k].var_t) + dt * dt / reg[k].var_t);
            cond_means[k] = pose_exp(c.mean_pose, reg[k].gain * dt);
            ptrs[k] = &cond_means[k];
        }
        const Eigen::VectorXd h = (logh.array() - log_sum_exp(logh)).exp().matrix();
        Eigen::Index best = 0;
        h.maxCoeff(&best);
        KarcherOptions opts;
        opts.tolerance = 1e-9;
        const HumanPose mean =
            karcher_mean(ptrs, std::span<const double>(h.data(), kk), &cond_means[static_cast<std::size_t>(best)], opts)
                .mean;

        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(pose_dim, pose_dim);
        Eigen::VectorXd ubar = Eigen::VectorXd::Zero(pose_dim);
        for (std::size_t k = 0; k < kk; ++k) {
            const double w = h[static_cast<Eigen::Index>(k)];
            const Eigen::VectorXd u = pose_log(mean, cond_means[k]);
            cov += w * (reg[k].cond_cov + u * u.transpose());
            ubar += w * u;
        }
        cov -= ubar * ubar.transpose();
        out.poses.push_back(mean);
        out.covariances.push_back(0.5 * (cov + cov.transpose()));
    }
    return out;
}

IdealMovement ideal_movement(const ExerciseModel& model) {
    std::vector<double> times(model.t_ref);
    for (std::size_t t = 0; t < model.t_ref; ++t) times[t] = frame_time(t, model.t_ref);
    return gmr_generate(model, times);
}

LogLikelihood sequence_loglik(const ExerciseModel& model, const PoseSequence& seq) {
    if (seq.size() != model.t_ref) {
        throw DataError("sequence has " + std::to_string(seq.size()) + " frames, model expects " +
                        std::to_string(model.t_ref));
    }
    const PoseSequence local = select_joints(seq, model.joint_set);
    Samples s;
    for (std::size_t t = 0; t < local.size(); ++t) {
        s.poses.push_back(&local.poses[t]);
        s.times.push_back(frame_time(t, model.t_ref));
    }
    const Eigen::MatrixXd logp = weighted_log_densities(model.components, s);
    LogLikelihood out;
    out.per_frame.resize(s.size());
    for (Eigen::Index i = 0; i < logp.cols(); ++i) {
        out.per_frame[static_cast<std::size_t>(i)] = log_sum_exp(logp.col(i));
        out.total += out.per_frame[static_cast<std::size_t>(i)];
    }
    return out;
}

ExerciseModel marginalize(const ExerciseModel& model, const std::vector<std::size_t>& joint_indices) {
    if (joint_indices.empty()) throw DataError("marginalize: no joints selected");
    std::vector<std::size_t> joints = joint_indices;
    std::sort(joints.begin(), joints.end());
    joints.erase(std::unique(joints.begin(), joints.end()), joints.end());
    std::vector<Eigen::Index> dims{0};
    for (auto j : joints) {
        if (j >= model.joint_set.size()) throw DataError("marginalize: joint index out of range");
        for (std::size_t d = 0; d < kTangentDimsPerJoint; ++d) {
            dims.push_back(static_cast<Eigen::Index>(1 + kTangentDimsPerJoint * j + d));
        }
    }
    ExerciseModel out = model;
    out.joint_set = model.joint_set.subset(joints);
    for (auto& c : out.components) {
        c.mean_pose = select_joints(c.mean_pose, joints);
        c.cov = select_block(c.cov, dims);
    }
    return out;
}

ExerciseModel marginalize_bodypart(const ExerciseModel& model, const std::string& part) {
    return marginalize(model, model.joint_set.part_indices(part));
}

}  // namespace posecoach
