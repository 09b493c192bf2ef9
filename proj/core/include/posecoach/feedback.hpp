#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "posecoach/assessment.hpp"
#include "posecoach/linear_svm.hpp"
#include "posecoach/skeleton_io.hpp"

namespace posecoach {

/// residual_t = pose_log(ideal_t, seq_t). Both sequences must have the same
/// length and joint set.
std::vector<Eigen::VectorXd> tangent_residuals(const PoseSequence& ideal, const PoseSequence& seq);

/// Mean over the segment's frames of the residual coordinates belonging to
/// `part`.
Eigen::VectorXd aggregate_features(std::span<const Eigen::VectorXd> residuals, const Segment& segment,
                                   const JointSet& joints, const std::string& part);

struct ErrorExample {
    Eigen::VectorXd feature;
    std::string label;
    std::string exercise;
    std::string part;
};

struct ErrorPrediction {
    std::string label;
    double confidence = 0.0;
};

/// One (exercise, body part) scope: z-scored features, one linear decision
/// function per class (a single one when there are two classes) and a
/// sigmoid per decision function mapping it to a confidence.
struct ScopeClassifier {
    std::vector<std::string> classes;  // sorted
    Eigen::VectorXd feature_mean;
    Eigen::VectorXd feature_scale;
    std::vector<LinearSvm> machines;
    std::vector<PlattScaling> calibration;

    /// Confidence of every class.
    std::vector<double> confidences(const Eigen::VectorXd& feature) const;
    ErrorPrediction best(const Eigen::VectorXd& feature) const;
};

inline constexpr double kDefaultConfidenceThreshold = 0.6;
inline constexpr int kClassifierFormatVersion = 1;

struct ErrorClassifier {
    double theta = kDefaultConfidenceThreshold;
    double c = 1.0;
    std::map<std::pair<std::string, std::string>, ScopeClassifier> scopes;

    bool has_scope(const std::string& exercise, const std::string& part) const;
    /// Throws DataError for an unknown scope.
    const ScopeClassifier& scope(const std::string& exercise, const std::string& part) const;
    /// Highest-confidence class, or nothing when its confidence is below theta.
    std::optional<ErrorPrediction> classify(const Eigen::VectorXd& feature, const std::string& exercise,
                                            const std::string& part) const;
};

/// Needs at least two classes and three examples per class in every scope.
ErrorClassifier train_error_classifier(std::span<const ErrorExample> examples,
                                       double theta = kDefaultConfidenceThreshold, double c = 1.0);

std::string classifier_to_json(const ErrorClassifier& classifier);
ErrorClassifier classifier_from_json(std::string_view text);
void save_classifier(const ErrorClassifier& classifier, const std::filesystem::path& path);
ErrorClassifier load_classifier(const std::filesystem::path& path);

/// exercise -> part -> label -> template. Templates may use {part} (display
/// name, e.g. "left arm") and {segment} (1-based segment number).
class AdviceDictionary {
public:
    using Table = std::map<std::string, std::map<std::string, std::map<std::string, std::string>>>;

    AdviceDictionary() = default;
    explicit AdviceDictionary(Table entries) : entries_(std::move(entries)) {}

    /// Sentences for the synthetic error taxonomy of the three built-in exercises.
    static AdviceDictionary defaults();

    const Table& entries() const { return entries_; }
    bool contains(const std::string& exercise, const std::string& part, const std::string& label) const;
    /// Falls back to "Your {part} movement needs correction in part {segment}."
    /// when there is no entry.
    std::string advise(const std::string& exercise, const std::string& part, const std::string& label,
                       std::size_t segment) const;
    /// Labels of the classifier with no dictionary entry, as "exercise/part/label".
    std::vector<std::string> missing_entries(const ErrorClassifier& classifier) const;

private:
    Table entries_;
};

inline constexpr const char* kFallbackAdvice = "Your {part} movement needs correction in part {segment}.";

std::string fill_template(const std::string& templ, const std::string& part, std::size_t segment);

std::string dictionary_to_json(const AdviceDictionary& dictionary);
AdviceDictionary dictionary_from_json(std::string_view text);
AdviceDictionary load_dictionary(const std::filesystem::path& path);

/// Classifies every (segment, part) whose score is below `score_threshold`
/// and appends an ErrorFinding with advice for confident predictions.
/// Segments are numbered from 1 in findings and advice.
void attach_feedback(AssessmentReport& report, const PoseSequence& ideal, const std::string& exercise,
                     const ErrorClassifier& classifier, const AdviceDictionary& dictionary,
                     double score_threshold);

/// Feature for a labeled example: the mean residual of `part` over the
/// report's segment `segment` (1-based), or over all frames when empty.
Eigen::VectorXd example_feature(const AssessmentReport& report, const PoseSequence& ideal, const std::string& part,
                                std::optional<std::size_t> segment);

}  // namespace posecoach
