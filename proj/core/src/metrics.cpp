#include "thermovqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "thermovqa/errors.hpp"
#include "thermovqa/image_io.hpp"

namespace thermovqa {

std::string to_string(Subset s) {
    switch (s) {
        case Subset::All: return "all";
        case Subset::Normal: return "normal";
        case Subset::Anomaly: return "anomaly";
        case Subset::Overheating: return "overheating";
        case Subset::Reflection: return "reflection";
        case Subset::SpatialTape: return "spatial_tape";
    }
    throw ConfigError("invalid subset value");
}

namespace {

bool in_subset(const TrialRecord& record, Subset subset) {
    switch (subset) {
        case Subset::All: return true;
        case Subset::Normal:
            return record.ground_truth_class == ClassLabel::Normal;
        case Subset::Anomaly:
            return record.ground_truth_class != ClassLabel::Normal;
        case Subset::Overheating:
            return record.ground_truth_class == ClassLabel::Overheating;
        case Subset::Reflection:
            return record.ground_truth_class == ClassLabel::Reflection;
        case Subset::SpatialTape:
            return record.ground_truth_class == ClassLabel::SpatialTape;
    }
    return false;
}

std::vector<int> trial_indexes(const std::vector<TrialRecord>& records) {
    std::set<int> seen;
    for (const auto& record : records) {
        seen.insert(record.trial_index);
    }
    return {seen.begin(), seen.end()};
}

double mean(const std::vector<double>& values) {
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
}

}  // namespace

std::optional<AccuracyResult> accuracy(const std::vector<TrialRecord>& records,
                                       Subset subset) {
    AccuracyResult result;
    for (int trial : trial_indexes(records)) {
        int n = 0, correct = 0;
        for (const auto& record : records) {
            if (record.trial_index != trial || !record.ok ||
                !in_subset(record, subset)) {
                continue;
            }
            ++n;
            if (record.binary_prediction == record.ground_truth_label) {
                ++correct;
            }
        }
        if (n > 0) {
            result.per_trial.push_back(100.0 * correct / n);
        }
    }
    if (result.per_trial.empty()) {
        return std::nullopt;
    }
    result.average = mean(result.per_trial);
    return result;
}

double range_across_trials(const std::vector<TrialRecord>& records,
                           Subset subset) {
    auto result = accuracy(records, subset);
    if (!result || result->per_trial.size() < 2) {
        return 0.0;
    }
    auto [lo, hi] =
        std::minmax_element(result->per_trial.begin(), result->per_trial.end());
    return *hi - *lo;
}

double pct_unsure(const std::vector<TrialRecord>& records) {
    int n = 0, unsure = 0;
    for (const auto& record : records) {
        if (!record.ok) continue;
        ++n;
        if (record.verdict == Verdict::Unsure) ++unsure;
    }
    return n == 0 ? 0.0 : 100.0 * unsure / n;
}

AucMethod auc_method_from_string(std::string_view s) {
    if (s == "fraction_score") return AucMethod::FractionScore;
    if (s == "per_trial_binary") return AucMethod::PerTrialBinary;
    throw ConfigError("unknown AUC method: '" + std::string(s) +
                      "' (expected fraction_score or per_trial_binary)");
}

std::string to_string(AucMethod m) {
    return m == AucMethod::FractionScore ? "fraction_score" : "per_trial_binary";
}

double auc_from_scores(const std::vector<double>& scores,
                       const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw ConfigError("auc_from_scores: scores and labels differ in length");
    }
    std::size_t n_pos = 0, n_neg = 0;
    for (int label : labels) {
        (label != 0 ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0) {
        throw RangeError("AUC needs both classes present (got " +
                         std::to_string(n_pos) + " anomalies, " +
                         std::to_string(n_neg) + " normals)");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    // Sweep thresholds from high to low, grouping tied scores so each distinct
    // score contributes one trapezoid.
    double area = 0.0;
    double tp = 0.0, fp = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        double tp_add = 0.0, fp_add = 0.0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] != 0 ? tp_add : fp_add) += 1.0;
            ++j;
        }
        double prev_tp = tp, prev_fp = fp;
        tp += tp_add;
        fp += fp_add;
        area += (fp - prev_fp) / static_cast<double>(n_neg) * (tp + prev_tp) /
                (2.0 * static_cast<double>(n_pos));
        i = j;
    }
    return 100.0 * area;
}

double auc(const std::vector<TrialRecord>& records, AucMethod method) {
    if (method == AucMethod::FractionScore) {
        // Anomaly score per image: fraction of its completed trials that
        // predicted anomaly.
        struct Tally {
            int anomalous = 0;
            int total = 0;
            int label = 0;
        };
        std::map<std::string, Tally> per_image;
        for (const auto& record : records) {
            if (!record.ok) continue;
            Tally& tally = per_image[record.image_id];
            ++tally.total;
            if (record.binary_prediction == BinaryLabel::Anomaly) {
                ++tally.anomalous;
            }
            tally.label = record.ground_truth_label == BinaryLabel::Anomaly;
        }
        std::vector<double> scores;
        std::vector<int> labels;
        for (const auto& [id, tally] : per_image) {
            scores.push_back(static_cast<double>(tally.anomalous) / tally.total);
            labels.push_back(tally.label);
        }
        return auc_from_scores(scores, labels);
    }

    // PerTrialBinary: balanced accuracy per trial, averaged.
    std::vector<double> per_trial;
    for (int trial : trial_indexes(records)) {
        int pos_n = 0, pos_correct = 0, neg_n = 0, neg_correct = 0;
        for (const auto& record : records) {
            if (record.trial_index != trial || !record.ok) continue;
            bool anomalous = record.ground_truth_label == BinaryLabel::Anomaly;
            bool correct = record.binary_prediction == record.ground_truth_label;
            if (anomalous) {
                ++pos_n;
                pos_correct += correct;
            } else {
                ++neg_n;
                neg_correct += correct;
            }
        }
        if (pos_n == 0 || neg_n == 0) continue;
        double tpr = static_cast<double>(pos_correct) / pos_n;
        double tnr = static_cast<double>(neg_correct) / neg_n;
        per_trial.push_back((tpr + tnr) / 2.0);
    }
    if (per_trial.empty()) {
        throw RangeError("AUC needs both classes present in at least one trial");
    }
    return 100.0 * mean(per_trial);
}

DecomposeResiduals decompose_check(const MetricsRow& row, ClassSizes sizes) {
    DecomposeResiduals residuals;
    if (row.avg_acc_all && row.avg_acc_normal && row.avg_acc_anomaly) {
        double expected = (sizes.normal * *row.avg_acc_normal +
                           sizes.anomaly() * *row.avg_acc_anomaly) /
                          static_cast<double>(sizes.all());
        residuals.all = std::fabs(*row.avg_acc_all - expected);
    }
    if (row.avg_acc_anomaly && row.avg_acc_overheating && row.avg_acc_reflection &&
        row.avg_acc_spatial_tape) {
        double expected = (sizes.overheating * *row.avg_acc_overheating +
                           sizes.reflection * *row.avg_acc_reflection +
                           sizes.spatial_tape * *row.avg_acc_spatial_tape) /
                          static_cast<double>(sizes.anomaly());
        residuals.anomaly = std::fabs(*row.avg_acc_anomaly - expected);
    }
    return residuals;
}

std::vector<MetricsRow> build_table(const std::vector<TrialRecord>& records,
                                    AucMethod method) {
    std::map<std::pair<std::string, int>, std::vector<TrialRecord>> groups;
    for (const auto& record : records) {
        groups[{record.backend_id, record.prompt_id}].push_back(record);
    }

    std::vector<MetricsRow> rows;
    for (const auto& [key, group] : groups) {
        MetricsRow row;
        row.backend_id = key.first;
        row.prompt_id = key.second;
        auto pick = [&](Subset subset) -> std::optional<double> {
            auto result = accuracy(group, subset);
            if (!result) return std::nullopt;
            return result->average;
        };
        row.avg_acc_all = pick(Subset::All);
        row.avg_acc_normal = pick(Subset::Normal);
        row.avg_acc_anomaly = pick(Subset::Anomaly);
        row.avg_acc_overheating = pick(Subset::Overheating);
        row.avg_acc_reflection = pick(Subset::Reflection);
        row.avg_acc_spatial_tape = pick(Subset::SpatialTape);
        row.range_acc_all = range_across_trials(group, Subset::All);
        row.pct_unsure = pct_unsure(group);
        try {
            row.auc = auc(group, method);
        } catch (const RangeError&) {
            row.auc = std::nullopt;  // single-class group
        }
        for (const auto& record : group) {
            (record.ok ? row.n_records : row.n_failed) += 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::optional<double> cross_prompt_mean(const std::vector<MetricsRow>& rows,
                                        std::string_view backend_id) {
    std::vector<double> values;
    for (const auto& row : rows) {
        if (row.backend_id == backend_id && row.avg_acc_all) {
            values.push_back(*row.avg_acc_all);
        }
    }
    if (values.empty()) return std::nullopt;
    return mean(values);
}

namespace {

std::string fmt_pct(const std::optional<double>& value) {
    if (!value) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", *value);
    return buf;
}

std::string fmt_pct(double value) { return fmt_pct(std::optional<double>(value)); }

}  // namespace

std::string render_text_report(const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << "Accuracy (%) averaged over trials, range across trials, unsure rate, "
           "and AUC per backend and prompt\n\n";
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%-14s %-7s %7s %8s %9s %13s %12s %13s %7s %9s %7s\n",
                  "backend", "prompt", "all", "normal", "anomaly", "overheating",
                  "reflection", "spatial_tape", "range", "%unsure", "auc");
    out << line;
    out << std::string(120, '-') << "\n";
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line),
                      "%-14s %-7d %7s %8s %9s %13s %12s %13s %7s %9s %7s\n",
                      row.backend_id.c_str(), row.prompt_id,
                      fmt_pct(row.avg_acc_all).c_str(),
                      fmt_pct(row.avg_acc_normal).c_str(),
                      fmt_pct(row.avg_acc_anomaly).c_str(),
                      fmt_pct(row.avg_acc_overheating).c_str(),
                      fmt_pct(row.avg_acc_reflection).c_str(),
                      fmt_pct(row.avg_acc_spatial_tape).c_str(),
                      fmt_pct(row.range_acc_all).c_str(),
                      fmt_pct(row.pct_unsure).c_str(), fmt_pct(row.auc).c_str());
        out << line;
        if (row.n_failed > 0) {
            out << "  (" << row.n_failed << " failed trial(s) excluded)\n";
        }
    }

    out << "\nAUC summary\n";
    std::set<std::string> backend_ids;
    for (const auto& row : rows) backend_ids.insert(row.backend_id);
    for (const auto& backend_id : backend_ids) {
        out << "  " << backend_id << ":";
        for (const auto& row : rows) {
            if (row.backend_id != backend_id) continue;
            out << " prompt" << row.prompt_id << "=" << fmt_pct(row.auc);
        }
        auto xmean = cross_prompt_mean(rows, backend_id);
        out << "  cross-prompt mean acc=" << fmt_pct(xmean) << "\n";
    }
    return out.str();
}

std::string render_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << "backend,prompt,avg_acc_all,avg_acc_normal,avg_acc_anomaly,"
           "avg_acc_overheating,avg_acc_reflection,avg_acc_spatial_tape,"
           "range_acc_all,pct_unsure,auc,n_records,n_failed\n";
    for (const auto& row : rows) {
        out << row.backend_id << "," << row.prompt_id << ","
            << fmt_pct(row.avg_acc_all) << "," << fmt_pct(row.avg_acc_normal)
            << "," << fmt_pct(row.avg_acc_anomaly) << ","
            << fmt_pct(row.avg_acc_overheating) << ","
            << fmt_pct(row.avg_acc_reflection) << ","
            << fmt_pct(row.avg_acc_spatial_tape) << ","
            << fmt_pct(row.range_acc_all) << "," << fmt_pct(row.pct_unsure)
            << "," << fmt_pct(row.auc) << "," << row.n_records << ","
            << row.n_failed << "\n";
    }
    return out.str();
}

ReportPaths emit_report(const std::vector<MetricsRow>& rows,
                        const std::filesystem::path& base_path) {
    ReportPaths paths;
    paths.text = base_path;
    paths.text += ".txt";
    paths.csv = base_path;
    paths.csv += ".csv";
    write_text_file(paths.text, render_text_report(rows));
    write_text_file(paths.csv, render_csv(rows));
    return paths;
}

}  // namespace thermovqa
