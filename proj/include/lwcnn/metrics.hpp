#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lwcnn {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::size_t classes = 0;
    std::vector<std::size_t> counts;  // row-major classes x classes

    explicit ConfusionMatrix(std::size_t c = 0) : classes(c), counts(c * c, 0) {}

    std::size_t &at(std::size_t truth, std::size_t predicted) { return counts[truth * classes + predicted]; }
    std::size_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * classes + predicted]; }
    std::size_t total() const;
    std::size_t trace() const;
    std::size_t row_sum(std::size_t i) const;
    std::size_t column_sum(std::size_t j) const;

    ConfusionMatrix &operator+=(const ConfusionMatrix &other);
    bool operator==(const ConfusionMatrix &) const = default;
};

/// Throws std::invalid_argument on unequal lengths or a label outside [0, classes).
ConfusionMatrix confusion(const std::vector<int> &truth, const std::vector<int> &predicted, std::size_t classes);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

/// Any 0/0 ratio is reported as 0.
std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix &cm);

struct Report {
    std::vector<std::string> class_names;
    std::vector<ClassMetrics> classes;
    double accuracy = 0.0;  // trace / total
    ClassMetrics macro;     // unweighted mean over classes
    ClassMetrics weighted;  // support-weighted mean
    std::size_t total = 0;
};

/// Throws std::invalid_argument for an empty matrix or a name count mismatch.
Report aggregate(const ConfusionMatrix &cm, const std::vector<std::string> &class_names);

/// Classification report table, two decimals.
std::string render_text(const Report &report);

/// class,precision,recall,f1,support rows at full precision, then accuracy,
/// macro avg and weighted avg rows.
std::string render_csv(const Report &report);
Report parse_report_csv(std::string_view csv);

/// Header row of predicted class names; one row per true class.
std::string confusion_csv(const ConfusionMatrix &cm, const std::vector<std::string> &class_names);

}  // namespace lwcnn
