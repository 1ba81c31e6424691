#include "hfo/outcome.hpp"

#include "hfo/error.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace hfo::outcome {

const char* to_string(Prognosis p) { return p == Prognosis::SeizureFree ? "SeizureFree" : "Recurrence"; }

const char* to_string(OutcomeClass c) {
    switch (c) {
        case OutcomeClass::TP: return "TP";
        case OutcomeClass::TN: return "TN";
        case OutcomeClass::FP: return "FP";
        case OutcomeClass::FN: return "FN";
    }
    return "?";
}

const char* to_string(CiMethod m) {
    switch (m) {
        case CiMethod::ClopperPearson: return "clopper-pearson";
        case CiMethod::Wilson: return "wilson";
        case CiMethod::Normal: return "normal";
    }
    return "?";
}

CiMethod parse_ci_method(const std::string& text) {
    if (text == "clopper-pearson") return CiMethod::ClopperPearson;
    if (text == "wilson") return CiMethod::Wilson;
    if (text == "normal") return CiMethod::Normal;
    throw Error(ErrorCode::InvalidArgument, "unknown CI method '" + text + "'");
}

void PatientOutcome::validate() const {
    if (ilae < 1 || ilae > 6)
        throw Error(ErrorCode::InvalidArgument, "patient " + patient_id + ": ILAE class must be in [1,6]");
    if (followup_months < 0) throw Error(ErrorCode::InvalidArgument, "patient " + patient_id + ": negative follow-up");
}

// ILAE 1 is seizure freedom; every class above it counts as recurrence.
Prognosis PatientOutcome::actual() const { return ilae > 1 ? Prognosis::Recurrence : Prognosis::SeizureFree; }

Prognosis predict(double max_post_rate) {
    if (max_post_rate < 0.0 || std::isnan(max_post_rate))
        throw Error(ErrorCode::NegativeRate, "HFO rate must be non-negative");
    return max_post_rate >= kResidualRate ? Prognosis::Recurrence : Prognosis::SeizureFree;
}

OutcomeClass classify(Prognosis predicted, Prognosis actual) {
    if (predicted == Prognosis::Recurrence) return actual == Prognosis::Recurrence ? OutcomeClass::TP : OutcomeClass::FP;
    return actual == Prognosis::SeizureFree ? OutcomeClass::TN : OutcomeClass::FN;
}

OutcomePrediction make_prediction(const PatientOutcome& patient, double max_post_rate, double max_pre_rate) {
    patient.validate();
    OutcomePrediction p;
    p.patient_id = patient.patient_id;
    p.max_pre_rate = max_pre_rate;
    p.max_post_rate = max_post_rate;
    p.predicted = predict(max_post_rate);
    p.residual_hfo = p.predicted == Prognosis::Recurrence;
    p.actual = patient.actual();
    p.ilae = patient.ilae;
    p.cls = classify(p.predicted, p.actual);
    return p;
}

ConfidenceInterval binomial_ci(std::size_t successes, std::size_t trials, double level, CiMethod method) {
    if (trials == 0 || successes > trials) throw Error(ErrorCode::InvalidCounts, "need 0 <= successes <= trials, trials >= 1");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidArgument, "confidence level must be in (0,1)");
    const double alpha = 1.0 - level;
    const double x = static_cast<double>(successes);
    const double n = static_cast<double>(trials);
    ConfidenceInterval ci;

    switch (method) {
        case CiMethod::ClopperPearson:
            ci.low = successes == 0 ? 0.0 : boost::math::ibeta_inv(x, n - x + 1.0, alpha / 2.0);
            ci.high = successes == trials ? 1.0 : boost::math::ibeta_inv(x + 1.0, n - x, 1.0 - alpha / 2.0);
            break;
        case CiMethod::Wilson: {
            const double z = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
            const double p = x / n;
            const double denom = 1.0 + z * z / n;
            const double centre = (p + z * z / (2.0 * n)) / denom;
            const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
            ci = {std::max(0.0, centre - half), std::min(1.0, centre + half)};
            break;
        }
        case CiMethod::Normal: {
            const double z = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
            const double p = x / n;
            const double half = z * std::sqrt(p * (1.0 - p) / n);
            ci = {std::max(0.0, p - half), std::min(1.0, p + half)};
            break;
        }
    }
    return ci;
}

CohortMetrics cohort_metrics(std::span<const OutcomeClass> classes, double level, CiMethod method) {
    if (classes.empty()) throw Error(ErrorCode::EmptyInput, "cohort is empty");
    CohortMetrics m;
    for (auto c : classes) {
        switch (c) {
            case OutcomeClass::TP: ++m.tp; break;
            case OutcomeClass::TN: ++m.tn; break;
            case OutcomeClass::FP: ++m.fp; break;
            case OutcomeClass::FN: ++m.fn; break;
        }
    }
    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.ppv = ratio(m.tp, m.tp + m.fp);
    m.npv = ratio(m.tn, m.tn + m.fn);
    m.sensitivity = ratio(m.tp, m.tp + m.fn);
    m.specificity = ratio(m.tn, m.tn + m.fp);
    const std::size_t correct = m.tp + m.tn;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(classes.size());
    m.accuracy_ci = binomial_ci(correct, classes.size(), level, method);
    return m;
}

std::string cohort_report_json(std::span<const OutcomePrediction> rows, const CohortMetrics& metrics) {
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j;
    j["patients"] = json::array();
    for (const auto& r : rows) {
        j["patients"].push_back({{"patient_id", r.patient_id},
                                 {"max_pre_rate", r.max_pre_rate},
                                 {"max_post_rate", r.max_post_rate},
                                 {"residual_hfo", r.residual_hfo},
                                 {"predicted", to_string(r.predicted)},
                                 {"actual", to_string(r.actual)},
                                 {"ilae", r.ilae},
                                 {"class", to_string(r.cls)}});
    }
    j["metrics"] = {{"tp", metrics.tp},
                    {"tn", metrics.tn},
                    {"fp", metrics.fp},
                    {"fn", metrics.fn},
                    {"ppv", opt(metrics.ppv)},
                    {"npv", opt(metrics.npv)},
                    {"sensitivity", opt(metrics.sensitivity)},
                    {"specificity", opt(metrics.specificity)},
                    {"accuracy", metrics.accuracy},
                    {"accuracy_ci", {metrics.accuracy_ci.low, metrics.accuracy_ci.high}}};
    return j.dump(2) + "\n";
}

}  // namespace hfo::outcome
