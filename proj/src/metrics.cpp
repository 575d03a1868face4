#include "lwcnn/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace lwcnn {

std::size_t ConfusionMatrix::total() const {
    std::size_t s = 0;
    for (auto v : counts) {
        s += v;
    }
    return s;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < classes; ++i) {
        s += at(i, i);
    }
    return s;
}

std::size_t ConfusionMatrix::row_sum(std::size_t i) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < classes; ++j) {
        s += at(i, j);
    }
    return s;
}

std::size_t ConfusionMatrix::column_sum(std::size_t j) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < classes; ++i) {
        s += at(i, j);
    }
    return s;
}

ConfusionMatrix &ConfusionMatrix::operator+=(const ConfusionMatrix &other) {
    if (other.classes != classes) {
        throw std::invalid_argument("confusion matrices have different class counts");
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        counts[i] += other.counts[i];
    }
    return *this;
}

ConfusionMatrix confusion(const std::vector<int> &truth, const std::vector<int> &predicted, std::size_t classes) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("confusion: " + std::to_string(truth.size()) + " true labels but " +
                                    std::to_string(predicted.size()) + " predictions");
    }
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes || static_cast<std::size_t>(p) >= classes) {
            throw std::invalid_argument("confusion: label out of range at position " + std::to_string(i));
        }
        ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix &cm) {
    std::vector<ClassMetrics> out(cm.classes);
    for (std::size_t i = 0; i < cm.classes; ++i) {
        const std::size_t tp = cm.at(i, i);
        auto &m = out[i];
        m.support = cm.row_sum(i);
        m.precision = ratio(tp, cm.column_sum(i));
        m.recall = ratio(tp, m.support);
        const double pr = m.precision + m.recall;
        m.f1 = pr == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / pr;
    }
    return out;
}

Report aggregate(const ConfusionMatrix &cm, const std::vector<std::string> &class_names) {
    if (class_names.size() != cm.classes) {
        throw std::invalid_argument("aggregate: class name count does not match the matrix");
    }
    Report r;
    r.total = cm.total();
    if (r.total == 0) {
        throw std::invalid_argument("aggregate: empty confusion matrix");
    }
    r.class_names = class_names;
    r.classes = per_class_metrics(cm);
    r.accuracy = ratio(cm.trace(), r.total);
    const double n = static_cast<double>(cm.classes), total = static_cast<double>(r.total);
    for (const auto &m : r.classes) {
        r.macro.precision += m.precision / n;
        r.macro.recall += m.recall / n;
        r.macro.f1 += m.f1 / n;
        const double w = static_cast<double>(m.support);
        r.weighted.precision += w * m.precision;
        r.weighted.recall += w * m.recall;
        r.weighted.f1 += w * m.f1;
    }
    r.weighted.precision /= total;
    r.weighted.recall /= total;
    r.weighted.f1 /= total;
    r.macro.support = r.weighted.support = r.total;
    return r;
}

std::string render_text(const Report &report) {
    std::size_t width = 12;
    for (const auto &name : report.class_names) {
        width = std::max(width, name.size());
    }
    std::ostringstream out;
    char line[256];
    auto row = [&](const std::string &label, const ClassMetrics &m) {
        std::snprintf(line, sizeof line, "%-*s %9.2f %9.2f %9.2f %9zu\n", static_cast<int>(width), label.c_str(),
                      m.precision, m.recall, m.f1, m.support);
        out << line;
    };
    std::snprintf(line, sizeof line, "%-*s %9s %9s %9s %9s\n", static_cast<int>(width), "", "Precision", "Recall",
                  "F1-score", "Support");
    out << line;
    for (std::size_t i = 0; i < report.classes.size(); ++i) {
        row(report.class_names[i], report.classes[i]);
    }
    std::snprintf(line, sizeof line, "%-*s %9s %9s %9.2f %9zu\n", static_cast<int>(width), "Accuracy", "", "",
                  report.accuracy, report.total);
    out << line;
    row("Macro Avg", report.macro);
    row("Weighted Avg", report.weighted);
    return out.str();
}

std::string render_csv(const Report &report) {
    std::ostringstream out;
    char line[256];
    auto row = [&](const std::string &label, const ClassMetrics &m) {
        std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%zu\n", label.c_str(), m.precision, m.recall, m.f1,
                      m.support);
        out << line;
    };
    out << "class,precision,recall,f1,support\n";
    for (std::size_t i = 0; i < report.classes.size(); ++i) {
        row(report.class_names[i], report.classes[i]);
    }
    std::snprintf(line, sizeof line, "accuracy,,,%.17g,%zu\n", report.accuracy, report.total);
    out << line;
    row("macro avg", report.macro);
    row("weighted avg", report.weighted);
    return out.str();
}

Report parse_report_csv(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line) || line != "class,precision,recall,f1,support") {
        throw std::invalid_argument("report csv: bad header");
    }
    Report r;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != 5) {
            throw std::invalid_argument("report csv: expected 5 cells in '" + line + "'");
        }
        auto num = [](const std::string &s) { return s.empty() ? 0.0 : std::stod(s); };
        ClassMetrics m{num(cells[1]), num(cells[2]), num(cells[3]), std::stoul(cells[4])};
        if (cells[0] == "accuracy") {
            r.accuracy = m.f1;
            r.total = m.support;
        } else if (cells[0] == "macro avg") {
            r.macro = m;
        } else if (cells[0] == "weighted avg") {
            r.weighted = m;
        } else {
            r.class_names.push_back(cells[0]);
            r.classes.push_back(m);
        }
    }
    return r;
}

std::string confusion_csv(const ConfusionMatrix &cm, const std::vector<std::string> &class_names) {
    if (class_names.size() != cm.classes) {
        throw std::invalid_argument("confusion_csv: class name count does not match the matrix");
    }
    std::ostringstream out;
    out << "true\\predicted";
    for (const auto &name : class_names) {
        out << ',' << name;
    }
    out << '\n';
    for (std::size_t i = 0; i < cm.classes; ++i) {
        out << class_names[i];
        for (std::size_t j = 0; j < cm.classes; ++j) {
            out << ',' << cm.at(i, j);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace lwcnn
