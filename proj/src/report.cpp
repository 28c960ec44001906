#include "ricenet/report.hpp"

#include <algorithm>
#include <cstdio>

#include "ricenet/errors.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

namespace {

std::string g17(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string f2(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string f3(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

std::string results_to_csv(const std::vector<ExperimentResult>& results)
{
    std::string s = "combo,fold0,fold1,fold2,fold3,fold4,mean,sd,test_f1\n";
    for (const auto& r : results) {
        s += r.combo.name();
        for (double v : r.fold_val_f1) {
            s += "," + g17(v);
        }
        s += "," + g17(r.mean) + "," + g17(r.sd) + "," + g17(r.test_f1) + "\n";
    }
    return s;
}

std::optional<double> reference_val_f1(int combo_index)
{
    switch (combo_index) {
    case 1:
        return 0.70;
    case 2:
        return 0.58;
    case 3:
        return 0.78;
    case 5:
        return 0.828;
    case 6:
        return 0.83;
    case 7:
        return 0.804;
    default:
        return std::nullopt;
    }
}

std::string render_chart_svg(const std::vector<ExperimentResult>& results, bool paper_reference)
{
    if (results.empty()) {
        throw PreconditionError("render_chart_svg: no results");
    }
    const double width = 800;
    const double height = 440;
    const double left = 60;
    const double right = 20;
    const double top = 50;
    const double bottom = 110;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    const double gw = plot_w / static_cast<double>(results.size());
    const double bar_w = gw * 0.32;
    auto ypix = [&](double v) { return top + plot_h * (1.0 - std::clamp(v, 0.0, 1.0)); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(width) + "\" height=\"" + f2(height) +
         "\" viewBox=\"0 0 " + f2(width) + " " + f2(height) + "\" font-family=\"sans-serif\">\n";
    s += "<defs>\n"
         "<pattern id=\"stripes\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
         "patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"#c6dbef\"/>"
         "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#2171b5\" stroke-width=\"2.5\"/></pattern>\n"
         "<pattern id=\"dots\" width=\"5\" height=\"5\" patternUnits=\"userSpaceOnUse\">"
         "<rect width=\"5\" height=\"5\" fill=\"#fdd0a2\"/><circle cx=\"2.5\" cy=\"2.5\" r=\"1.1\" fill=\"#d94801\"/>"
         "</pattern>\n"
         "</defs>\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + f2(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
         "Macro F1 per modality combination</text>\n";

    // Axes and grid.
    for (int t = 0; t <= 5; ++t) {
        const double v = t / 5.0;
        const double y = ypix(v);
        s += "<line x1=\"" + f2(left) + "\" y1=\"" + f2(y) + "\" x2=\"" + f2(width - right) + "\" y2=\"" + f2(y) +
             "\" stroke=\"#dddddd\"/>\n";
        s += "<text x=\"" + f2(left - 6) + "\" y=\"" + f2(y + 4) + "\" text-anchor=\"end\" font-size=\"11\">" +
             f2(v).substr(0, 3) + "</text>\n";
    }
    s += "<line x1=\"" + f2(left) + "\" y1=\"" + f2(top) + "\" x2=\"" + f2(left) + "\" y2=\"" + f2(top + plot_h) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + f2(left) + "\" y1=\"" + f2(top + plot_h) + "\" x2=\"" + f2(width - right) + "\" y2=\"" +
         f2(top + plot_h) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"16\" y=\"" + f2(top + plot_h / 2) + "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
         f2(top + plot_h / 2) + ")\">Macro F1</text>\n";

    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        const double gx = left + gw * static_cast<double>(i);
        const double vx = gx + gw * 0.16;
        const double tx = vx + bar_w + gw * 0.04;
        const double base = top + plot_h;

        s += "<rect class=\"bar-val\" x=\"" + f2(vx) + "\" y=\"" + f2(ypix(r.mean)) + "\" width=\"" + f2(bar_w) +
             "\" height=\"" + f2(base - ypix(r.mean)) + "\" fill=\"url(#stripes)\" stroke=\"#08519c\"><title>" +
             r.combo.name() + " validation " + f3(r.mean) + " +/- " + f3(r.sd) + "</title></rect>\n";
        s += "<rect class=\"bar-test\" x=\"" + f2(tx) + "\" y=\"" + f2(ypix(r.test_f1)) + "\" width=\"" + f2(bar_w) +
             "\" height=\"" + f2(base - ypix(r.test_f1)) + "\" fill=\"url(#dots)\" stroke=\"#a63603\"><title>" +
             r.combo.name() + " test " + f3(r.test_f1) + "</title></rect>\n";

        const double cx = vx + bar_w / 2;
        const double y_lo = ypix(r.mean - r.sd);
        const double y_hi = ypix(r.mean + r.sd);
        const double cap = bar_w * 0.25;
        s += "<path class=\"errorbar\" d=\"M" + f2(cx) + " " + f2(y_lo) + "V" + f2(y_hi) + "M" + f2(cx - cap) + " " +
             f2(y_hi) + "H" + f2(cx + cap) + "M" + f2(cx - cap) + " " + f2(y_lo) + "H" + f2(cx + cap) +
             "\" stroke=\"black\" stroke-width=\"1.2\" fill=\"none\"/>\n";

        if (paper_reference) {
            if (const auto ref = reference_val_f1(r.combo.index())) {
                const double y = ypix(*ref);
                s += "<path class=\"paper-ref\" d=\"M" + f2(vx - 2) + " " + f2(y) + "H" + f2(vx + bar_w + 2) +
                     "\" stroke=\"#cb181d\" stroke-width=\"2\" stroke-dasharray=\"4 2\"><title>reference " + f3(*ref) +
                     "</title></path>\n";
            }
            if (r.combo.index() == 7) {
                const double y = ypix(kReferenceTestF1);
                s += "<path class=\"paper-ref\" d=\"M" + f2(tx - 2) + " " + f2(y) + "H" + f2(tx + bar_w + 2) +
                     "\" stroke=\"#cb181d\" stroke-width=\"2\" stroke-dasharray=\"4 2\"><title>reference test " +
                     f3(kReferenceTestF1) + " (combination not stated)</title></path>\n";
            }
        }

        const double lx = gx + gw / 2;
        const double ly = base + 14;
        s += "<text x=\"" + f2(lx) + "\" y=\"" + f2(ly) + "\" text-anchor=\"end\" font-size=\"10\" transform=\"rotate(-30 " +
             f2(lx) + " " + f2(ly) + ")\">" + r.combo.name() + "</text>\n";
    }

    // Legend.
    const double ly = height - 22;
    s += "<rect x=\"" + f2(left) + "\" y=\"" + f2(ly - 10) + "\" width=\"14\" height=\"12\" fill=\"url(#stripes)\" "
         "stroke=\"#08519c\"/>\n";
    s += "<text x=\"" + f2(left + 20) + "\" y=\"" + f2(ly) + "\" font-size=\"11\">validation (mean of 5 folds, sd)</text>\n";
    s += "<rect x=\"" + f2(left + 230) + "\" y=\"" + f2(ly - 10) + "\" width=\"14\" height=\"12\" fill=\"url(#dots)\" "
         "stroke=\"#a63603\"/>\n";
    s += "<text x=\"" + f2(left + 250) + "\" y=\"" + f2(ly) + "\" font-size=\"11\">test (majority vote)</text>\n";
    if (paper_reference) {
        s += "<line x1=\"" + f2(left + 400) + "\" y1=\"" + f2(ly - 4) + "\" x2=\"" + f2(left + 416) + "\" y2=\"" +
             f2(ly - 4) + "\" stroke=\"#cb181d\" stroke-width=\"2\" stroke-dasharray=\"4 2\"/>\n";
        s += "<text x=\"" + f2(left + 422) + "\" y=\"" + f2(ly) + "\" font-size=\"11\">published reference</text>\n";
    }
    s += "</svg>\n";
    return s;
}

void emit_report(const std::vector<ExperimentResult>& results, const std::filesystem::path& out_dir,
                 bool paper_reference)
{
    if (results.empty()) {
        throw PreconditionError("emit_report: no results");
    }
    write_text_file(out_dir / "ablation_results.csv", results_to_csv(results));
    write_text_file(out_dir / "figure2.svg", render_chart_svg(results, paper_reference));
}

} // namespace ricenet
