#include "usejudge/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "usejudge/error.hpp"
#include "usejudge/rubric.hpp"

namespace usejudge {

namespace {

constexpr std::array<Grouping, 3> kGroupings = {Grouping::kOverall, Grouping::kPerTask,
                                                Grouping::kPerQuery};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string fraction_text(const Fraction& f) { return fmt::format("{}/{}", f.num, f.den); }

std::string manifest_field(const nlohmann::json& manifest, const char* key) {
  auto it = manifest.find(key);
  if (it == manifest.end() || !it->is_string()) return "-";
  return it->get<std::string>();
}

}  // namespace

EvalReport evaluate(std::span<const ScoredItem> items, const EvalOptions& options) {
  EvalReport r;
  r.options = options;
  r.items = items.size();
  for (std::size_t g = 0; g < kGroupings.size(); ++g) {
    r.correlations[g] = grouped_correlation(items, kGroupings[g]);
  }
  r.distribution = label_distribution(items);
  r.quadrants = quadrant_analysis(items, options.relevance_source);
  if (options.binarize) {
    try {
      r.binary = binarize_and_score(items, options.f1_average);
    } catch (const Error& e) {
      r.binary_error = e.what();
    }
  }
  return r;
}

std::string format_rho(const std::optional<double>& rho) {
  return rho ? fmt::format("{:.6f}", *rho) : "undefined";
}

std::string metrics_kv(const EvalReport& r) {
  std::map<std::string, std::string> kv;
  kv["items"] = std::to_string(r.items);
  for (const CorrelationResult& c : r.correlations) {
    const std::string prefix = "correlation." + lower(to_string(c.grouping));
    kv[prefix + ".rho"] = c.rho ? fmt::format("{}", *c.rho) : "undefined";
    kv[prefix + ".n"] = std::to_string(c.n);
    kv[prefix + ".groups_used"] = std::to_string(c.groups_used);
    kv[prefix + ".groups_skipped"] = std::to_string(c.groups_skipped);
  }
  kv["correlation.group_aggregation"] = "unweighted_mean_of_defined_groups";
  for (int label = 0; label < kNumLabels; ++label) {
    kv[fmt::format("distribution.human.{}", label)] = std::to_string(r.distribution.human[label]);
    kv[fmt::format("distribution.predicted.{}", label)] =
        std::to_string(r.distribution.predicted[label]);
  }
  kv["quadrant.source"] = std::string(to_string(r.quadrants.source));
  kv["quadrant.unlabeled"] = std::to_string(r.quadrants.partition.unlabeled);
  for (Quadrant q : kQuadrants) {
    const auto i = static_cast<std::size_t>(q);
    const std::string prefix = "quadrant." + std::string(to_string(q));
    kv[prefix + ".n"] = std::to_string(r.quadrants.partition.members[i].size());
    kv[prefix + ".rho"] = r.quadrants.cells[i].rho ? fmt::format("{}", *r.quadrants.cells[i].rho)
                                                   : "undefined";
  }
  if (r.binary) {
    const BinaryScores& b = *r.binary;
    kv["binary.mse"] = fraction_text(b.mse());
    kv["binary.mae"] = fraction_text(b.mae());
    kv["binary.accuracy"] = fraction_text(b.accuracy());
    kv["binary.f1"] = fmt::format("{}", b.f1());
    kv["binary.f1_average"] = std::string(to_string(b.average));
    kv["binary.retained"] = std::to_string(b.retained());
    kv["binary.excluded"] = std::to_string(b.excluded);
    kv["binary.tp"] = std::to_string(b.true_positive);
    kv["binary.fp"] = std::to_string(b.false_positive);
    kv["binary.tn"] = std::to_string(b.true_negative);
    kv["binary.fn"] = std::to_string(b.false_negative);
  } else if (r.binary_error) {
    kv["binary.error"] = *r.binary_error;
  }
  std::string out;
  for (const auto& [key, value] : kv) out += key + "=" + value + "\n";
  return out;
}

void write_report(const EvalReport& r, const nlohmann::json& manifest,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::string corr = "grouping\trho\tn\tgroups_used\tgroups_skipped\n";
  for (const CorrelationResult& c : r.correlations) {
    corr += fmt::format("{}\t{}\t{}\t{}\t{}\n", to_string(c.grouping), format_rho(c.rho), c.n,
                        c.groups_used, c.groups_skipped);
  }
  write_file(dir / "correlations.tsv", corr);

  std::string dist = "label\tname\thuman\tpredicted\n";
  for (int label = kNumLabels - 1; label >= 0; --label) {
    dist += fmt::format("{}\t{}\t{}\t{}\n", label, label_name(label), r.distribution.human[label],
                        r.distribution.predicted[label]);
  }
  write_file(dir / "distribution.tsv", dist);

  std::string quad = "quadrant\tsource\tn\trho\n";
  for (Quadrant q : kQuadrants) {
    const auto i = static_cast<std::size_t>(q);
    quad += fmt::format("{}\t{}\t{}\t{}\n", to_string(q), to_string(r.quadrants.source),
                        r.quadrants.partition.members[i].size(), format_rho(r.quadrants.cells[i].rho));
  }
  write_file(dir / "quadrants.tsv", quad);

  if (r.binary) {
    const BinaryScores& b = *r.binary;
    write_file(dir / "binary.tsv",
               fmt::format("mse\tmae\taccuracy\tf1\tf1_average\tretained\texcluded\n"
                           "{:.4f}\t{:.4f}\t{:.4f}\t{:.4f}\t{}\t{}\t{}\n",
                           b.mse().value(), b.mae().value(), b.accuracy().value(), b.f1(),
                           to_string(b.average), b.retained(), b.excluded));
  }

  std::string text;
  text += "Usefulness judgment report\n\n";
  text += fmt::format("Method:    {}\n", manifest_field(manifest, "method"));
  text += fmt::format("Scope:     {}\n", manifest_field(manifest, "scope"));
  text += fmt::format("Mask:      {}\n", manifest_field(manifest, "mask"));
  if (manifest.contains("backend") && manifest["backend"].contains("identity")) {
    text += fmt::format("Backend:   {}\n", manifest["backend"]["identity"].get<std::string>());
  }
  text += fmt::format("Template:  {}\n", manifest_field(manifest, "template_version"));
  if (manifest.contains("rubric")) {
    text += fmt::format("Rubric:    {} ({})\n", manifest["rubric"].value("version", "-"),
                        manifest["rubric"].value("provenance", "-"));
  }
  text += fmt::format("Items:     {}\n\n", r.items);

  text += "Spearman correlation (predicted vs human)\n";
  for (const CorrelationResult& c : r.correlations) {
    text += fmt::format("  {:<10} {:>10}", to_string(c.grouping), format_rho(c.rho));
    if (c.grouping != Grouping::kOverall) {
      text += fmt::format("   ({} groups, {} skipped)", c.groups_used, c.groups_skipped);
    }
    text += "\n";
  }
  text += "  Task and query values are the unweighted mean over groups with a defined\n"
          "  correlation; groups with fewer than 2 items or constant labels are skipped.\n\n";

  text += "Label distribution\n";
  text += fmt::format("  {:<22} {:>8} {:>10}\n", "label", "human", "predicted");
  for (int label = kNumLabels - 1; label >= 0; --label) {
    text += fmt::format("  {:<22} {:>8} {:>10}\n", fmt::format("{} {}", label, label_name(label)),
                        r.distribution.human[label], r.distribution.predicted[label]);
  }
  text += "\n";

  text += fmt::format("Relevance x usefulness quadrants ({}; high = labels 2 and 3)\n",
                      to_string(r.quadrants.source));
  for (Quadrant q : kQuadrants) {
    const auto i = static_cast<std::size_t>(q);
    text += fmt::format("  {:<6} n={:<6} rho={}\n", to_string(q),
                        r.quadrants.partition.members[i].size(), format_rho(r.quadrants.cells[i].rho));
  }
  if (r.quadrants.partition.unlabeled > 0) {
    text += fmt::format("  {} items without relevance labels left out\n",
                        r.quadrants.partition.unlabeled);
  }

  if (r.binary) {
    const BinaryScores& b = *r.binary;
    text += fmt::format(
        "\nBinary labels (0 negative, 2-3 positive, label 1 excluded: {} items)\n"
        "  MSE {:.4f}  MAE {:.4f}  Acc {:.4f}  F1 ({}) {:.4f}  over {} items\n",
        b.excluded, b.mse().value(), b.mae().value(), b.accuracy().value(), to_string(b.average),
        b.f1(), b.retained());
  } else if (r.binary_error) {
    text += "\nBinary labels: " + *r.binary_error + "\n";
  }
  write_file(dir / "report.txt", text);
  write_file(dir / "metrics.kv", metrics_kv(r));
}

std::string distribution_svg(const LabelDistribution& d, const std::string& title) {
  std::string escaped;
  for (char c : title) {
    switch (c) {
      case '&': escaped += "&amp;"; break;
      case '<': escaped += "&lt;"; break;
      case '>': escaped += "&gt;"; break;
      case '"': escaped += "&quot;"; break;
      default: escaped += c;
    }
  }
  constexpr int kWidth = 520, kHeight = 320, kLeft = 60, kBottom = 260, kTop = 50;
  std::size_t peak = 1;
  for (int l = 0; l < kNumLabels; ++l) peak = std::max({peak, d.human[l], d.predicted[l]});
  const double scale = static_cast<double>(kBottom - kTop) / static_cast<double>(peak);

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n"
      "<line x1=\"{4}\" y1=\"{5}\" x2=\"{6}\" y2=\"{5}\" stroke=\"black\"/>\n"
      "<line x1=\"{4}\" y1=\"{7}\" x2=\"{4}\" y2=\"{5}\" stroke=\"black\"/>\n",
      kWidth, kHeight, kWidth / 2, escaped, kLeft, kBottom, kWidth - 20, kTop);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", kLeft - 6, kTop + 4,
                     peak);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">0</text>\n", kLeft - 6, kBottom + 4);

  const int slot = (kWidth - 20 - kLeft) / kNumLabels;
  for (int label = 0; label < kNumLabels; ++label) {
    const int x = kLeft + label * slot + slot / 2;
    const std::array<std::pair<std::size_t, const char*>, 2> bars = {
        std::pair{d.human[label], "#4477aa"}, std::pair{d.predicted[label], "#ee6677"}};
    for (std::size_t b = 0; b < bars.size(); ++b) {
      const double h = static_cast<double>(bars[b].first) * scale;
      const int bx = x - 32 + static_cast<int>(b) * 32;
      svg += fmt::format(
          "<rect x=\"{}\" y=\"{:.1f}\" width=\"30\" height=\"{:.1f}\" fill=\"{}\"/>"
          "<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"10\">{}</text>\n",
          bx, kBottom - h, h, bars[b].second, bx + 15, kBottom - h - 3, bars[b].first);
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x, kBottom + 18,
                       label);
  }
  svg += fmt::format(
      "<text x=\"{0}\" y=\"{1}\" text-anchor=\"middle\">usefulness label</text>\n"
      "<rect x=\"{2}\" y=\"36\" width=\"10\" height=\"10\" fill=\"#4477aa\"/>"
      "<text x=\"{3}\" y=\"45\">human</text>\n"
      "<rect x=\"{4}\" y=\"36\" width=\"10\" height=\"10\" fill=\"#ee6677\"/>"
      "<text x=\"{5}\" y=\"45\">predicted</text>\n</svg>\n",
      kWidth / 2, kBottom + 40, kWidth - 180, kWidth - 165, kWidth - 100, kWidth - 85);
  return svg;
}

const std::array<AblationReference, 7>& ablation_reference() {
  static const std::array<AblationReference, 7> rows = {{{"RSU", 0.36, 0.37},
                                                         {"RS", 0.35, 0.35},
                                                         {"RU", 0.34, 0.33},
                                                         {"SU", 0.34, 0.31},
                                                         {"R", 0.32, 0.33},
                                                         {"S", 0.27, 0.29},
                                                         {"U", 0.27, 0.28}}};
  return rows;
}

void write_ablation(std::span<const AblationRow> rows, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& reference = ablation_reference();
  std::string tsv = "mask\trho\tn\tbatches\tfailed\treference_gpt_4o_mini\treference_llama_3_3_70b\terror\n";
  std::string text =
      "Feature-group ablation (OVERALL Spearman)\n"
      "Reference columns are published values for two hosted models; they are\n"
      "shown for orientation and are not reproduced by this run.\n\n";
  text += fmt::format("  {:<5} {:>10} {:>6} {:>8} {:>8}  {}\n", "mask", "rho", "n", "ref-a", "ref-b",
                      "note");
  std::string kv;
  for (const AblationRow& row : rows) {
    const std::string code = row.mask.code();
    auto ref = std::find_if(reference.begin(), reference.end(),
                            [&](const AblationReference& r) { return code == r.mask; });
    const std::string ref_a = ref != reference.end() ? fmt::format("{:.2f}", ref->gpt_4o_mini) : "-";
    const std::string ref_b = ref != reference.end() ? fmt::format("{:.2f}", ref->llama_3_3_70b) : "-";
    const std::string note = row.error.value_or("");
    tsv += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", code, format_rho(row.overall.rho),
                       row.overall.n, row.summary.batches, row.summary.failed, ref_a, ref_b, note);
    text += fmt::format("  {:<5} {:>10} {:>6} {:>8} {:>8}  {}\n", code, format_rho(row.overall.rho),
                        row.overall.n, ref_a, ref_b, note);
    kv += fmt::format("ablation.{}.rho={}\n", code,
                      row.overall.rho ? fmt::format("{}", *row.overall.rho) : "undefined");
    kv += fmt::format("ablation.{}.n={}\n", code, row.overall.n);
    kv += fmt::format("ablation.{}.failed={}\n", code, row.summary.failed);
  }
  kv += fmt::format("ablation.rows={}\n", rows.size());
  write_file(dir / "ablation.tsv", tsv);
  write_file(dir / "ablation.txt", text);
  write_file(dir / "metrics.kv", kv);
}

}  // namespace usejudge
