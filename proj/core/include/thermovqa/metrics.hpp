#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "thermovqa/runner.hpp"

namespace thermovqa {

// Which images count toward an accuracy figure.
enum class Subset { All, Normal, Anomaly, Overheating, Reflection, SpatialTape };

std::string to_string(Subset s);

struct AccuracyResult {
    std::vector<double> per_trial;  // percent, one entry per trial with data
    double average = 0.0;           // percent, mean of per_trial
};

// Per-trial accuracy over one (backend, prompt) group of records. Failed
// records are excluded from denominators. Absent when the subset is empty.
std::optional<AccuracyResult> accuracy(const std::vector<TrialRecord>& records,
                                       Subset subset);

// Max minus min per-trial accuracy; 0 with fewer than two trials.
double range_across_trials(const std::vector<TrialRecord>& records,
                           Subset subset = Subset::All);

// Unsure verdicts as a percentage of all completed records.
double pct_unsure(const std::vector<TrialRecord>& records);

enum class AucMethod { FractionScore, PerTrialBinary };

AucMethod auc_method_from_string(std::string_view s);  // throws ConfigError
std::string to_string(AucMethod m);

// Trapezoidal ROC area (percent) over arbitrary scores; labels hold 1 for
// anomaly, 0 for normal. Ties are grouped, so the result equals the pairwise
// statistic P[s_anomaly > s_normal] + 0.5 P[tie].
// Throws RangeError unless both classes are present.
double auc_from_scores(const std::vector<double>& scores,
                       const std::vector<int>& labels);

// AUC over one (backend, prompt) group. FractionScore scores each image by
// the fraction of its trials predicting anomaly; PerTrialBinary averages
// (TPR + TNR) / 2 across trials.
double auc(const std::vector<TrialRecord>& records, AucMethod method);

// One report row := one (backend, prompt) pair.
struct MetricsRow {
    std::string backend_id;
    int prompt_id = 0;
    std::optional<double> avg_acc_all;
    std::optional<double> avg_acc_normal;
    std::optional<double> avg_acc_anomaly;
    std::optional<double> avg_acc_overheating;
    std::optional<double> avg_acc_reflection;
    std::optional<double> avg_acc_spatial_tape;
    double range_acc_all = 0.0;
    double pct_unsure = 0.0;
    std::optional<double> auc;
    int n_records = 0;  // completed
    int n_failed = 0;
};

struct ClassSizes {
    int normal = 27;
    int overheating = 13;
    int reflection = 12;
    int spatial_tape = 8;

    int anomaly() const { return overheating + reflection + spatial_tape; }
    int all() const { return normal + anomaly(); }
};

struct DecomposeResiduals {
    double all = 0.0;      // |avg_all - weighted(normal, anomaly)|
    double anomaly = 0.0;  // |avg_anomaly - weighted(subclasses)|
};

// Audits the weighted-average identities of a row against the class sizes.
// Residuals stay under the 0.1 presentation grain for consistent tables.
DecomposeResiduals decompose_check(const MetricsRow& row, ClassSizes sizes = {});

// Groups records by (backend, prompt) and computes every row metric.
std::vector<MetricsRow> build_table(const std::vector<TrialRecord>& records,
                                    AucMethod method = AucMethod::FractionScore);

// Mean of avg_acc_all across a backend's rows (its per-prompt averages).
std::optional<double> cross_prompt_mean(const std::vector<MetricsRow>& rows,
                                        std::string_view backend_id);

// Human-readable table + AUC summary, and the same rows as CSV. Percentages
// are rounded to 0.1 at this stage only.
std::string render_text_report(const std::vector<MetricsRow>& rows);
std::string render_csv(const std::vector<MetricsRow>& rows);

struct ReportPaths {
    std::filesystem::path text;
    std::filesystem::path csv;
};

// Writes <base>.txt and <base>.csv next to each other.
ReportPaths emit_report(const std::vector<MetricsRow>& rows,
                        const std::filesystem::path& base_path);

}  // namespace thermovqa
