#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hfo::outcome {

/// Residual-HFO rule: a post-resection channel at or above this rate
/// (events/min) counts as residual.
inline constexpr double kResidualRate = 1.0;

enum class Prognosis { SeizureFree, Recurrence };
enum class OutcomeClass { TP, TN, FP, FN };

const char* to_string(Prognosis p);
const char* to_string(OutcomeClass c);

struct PatientOutcome {
    std::string patient_id;
    int ilae = 1;  // 1 = seizure free, 2..6 = recurrence
    int followup_months = 0;

    void validate() const;
    Prognosis actual() const;
};

/// Recurrence iff max_post_rate >= 1.0. Throws NegativeRate.
Prognosis predict(double max_post_rate);

OutcomeClass classify(Prognosis predicted, Prognosis actual);

struct OutcomePrediction {
    std::string patient_id;
    double max_pre_rate = 0.0;
    double max_post_rate = 0.0;
    bool residual_hfo = false;
    Prognosis predicted = Prognosis::SeizureFree;
    Prognosis actual = Prognosis::SeizureFree;
    int ilae = 1;
    OutcomeClass cls = OutcomeClass::TN;
};

OutcomePrediction make_prediction(const PatientOutcome& patient, double max_post_rate, double max_pre_rate = 0.0);

struct ConfidenceInterval {
    double low = 0.0;
    double high = 1.0;
};

enum class CiMethod { ClopperPearson, Wilson, Normal };

const char* to_string(CiMethod m);
CiMethod parse_ci_method(const std::string& text);

/// Two-sided interval for a binomial proportion. Clopper-Pearson uses Beta
/// quantiles; low is exactly 0 at zero successes and high exactly 1 at
/// successes == trials. Throws InvalidCounts.
ConfidenceInterval binomial_ci(std::size_t successes, std::size_t trials, double level = 0.95,
                               CiMethod method = CiMethod::ClopperPearson);

struct CohortMetrics {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::optional<double> ppv, npv, sensitivity, specificity;
    double accuracy = 0.0;
    ConfidenceInterval accuracy_ci;
};

/// Metrics whose denominator is zero are left empty. Throws EmptyInput.
CohortMetrics cohort_metrics(std::span<const OutcomeClass> classes, double level = 0.95,
                             CiMethod method = CiMethod::ClopperPearson);

/// Per-patient rows plus the metrics block, as pretty-printed JSON.
std::string cohort_report_json(std::span<const OutcomePrediction> rows, const CohortMetrics& metrics);

}  // namespace hfo::outcome
