#include "wafer/templates.hpp"

#include <cmath>

#include <opencv2/imgproc.hpp>

#include "json.hpp"
#include "wafer/errors.hpp"
#include "wafer/tensor_io.hpp"

namespace wafer {
namespace {

constexpr double kSketchCenter = 165.0;   // center of pool cell 16
constexpr double kCrossingOffset = 128.0;  // crossing streets at center +- offset

void fill_band(cv::Mat& img, bool horizontal, double center, double width, int level) {
  const int lo = static_cast<int>(std::lround(center - width / 2.0));
  const int hi = lo + static_cast<int>(std::lround(width));
  cv::Rect r = horizontal ? cv::Rect(0, lo, img.cols, hi - lo) : cv::Rect(lo, 0, hi - lo, img.rows);
  img(r & cv::Rect(0, 0, img.cols, img.rows)).setTo(level);
}

StreetTemplate crop_template(const FeatureStack& pooled, const TemplateMeta& meta, double floor) {
  const bool horizontal = meta.orientation == Orientation::kHorizontal;
  const int tw = horizontal ? kTemplateLength : kTemplateDepth;
  const int th = horizontal ? kTemplateDepth : kTemplateLength;
  const int cx = pooled.width() / 2;
  const int cy = pooled.height() / 2;
  const int x0 = cx - tw / 2;
  const int y0 = cy - th / 2;
  if (x0 < 0 || y0 < 0 || x0 + tw > pooled.width() || y0 + th > pooled.height()) {
    throw DataError("sketch too small for the template footprint");
  }
  double peak = 0.0;
  StreetTemplate t;
  t.meta = meta;
  for (const auto& plane : pooled.planes) {
    ImagePlane w(tw, th);
    for (int y = 0; y < th; ++y) {
      for (int x = 0; x < tw; ++x) w.at(x, y) = plane.at(x0 + x, y0 + y);
    }
    peak = std::max(peak, w.max());
    t.weights.push_back(std::move(w));
  }
  if (!(peak > 1e-6)) throw DataError("empty template");
  const double cut = static_cast<double>(floor) * peak;
  double ss = 0.0;
  for (auto& w : t.weights) {
    for (double& v : w.values()) {
      if (v < cut) v = 0.0;
      ss += static_cast<double>(v) * v;
    }
  }
  const double inv = static_cast<double>(1.0 / std::sqrt(ss));
  for (auto& w : t.weights) {
    for (double& v : w.values()) v *= inv;
  }
  return t;
}

nlohmann::json v1_json(const V1Params& p) {
  return {{"n_orientations", p.n_orientations},
          {"wavelengths", p.wavelengths},
          {"sigma_per_wavelength", p.sigma_per_wavelength},
          {"aspect", p.aspect},
          {"pool_factor", p.pool_factor},
          {"color_enabled", p.color_enabled}};
}

}  // namespace

std::vector<TemplateMeta> bank_layout() {
  std::vector<TemplateMeta> out;
  for (Orientation o : {Orientation::kHorizontal, Orientation::kVertical}) {
    for (int w = 1; w <= 3; ++w) {
      for (Polarity p : {Polarity::kDarkStreet, Polarity::kLightStreet}) {
        TemplateMeta m;
        m.orientation = o;
        m.width_class = w;
        m.polarity = p;
        out.push_back(m);
      }
    }
  }
  return out;
}

std::string sketch_name(const TemplateMeta& meta) {
  return std::string(meta.orientation == Orientation::kHorizontal ? "h" : "v") + "_w" +
         std::to_string(meta.width_class) + "_" +
         (meta.polarity == Polarity::kDarkStreet ? "dark" : "light") + ".png";
}

cv::Mat make_sketch(const TemplateMeta& meta) {
  const bool dark = meta.polarity == Polarity::kDarkStreet;
  const int chip_level = dark ? 185 : 70;
  const int street_level = dark ? 75 : 190;
  cv::Mat img(kCanonicalPx, kCanonicalPx, CV_8U, cv::Scalar(chip_level));
  const bool horizontal = meta.orientation == Orientation::kHorizontal;
  const double w = meta.width_px();
  fill_band(img, horizontal, kSketchCenter, w, street_level);
  fill_band(img, !horizontal, kSketchCenter - kCrossingOffset, w, street_level);
  fill_band(img, !horizontal, kSketchCenter + kCrossingOffset, w, street_level);
  return img;
}

void write_sketches(const std::filesystem::path& dir) {
  for (const auto& m : bank_layout()) write_png(dir / sketch_name(m), make_sketch(m));
}

StreetTemplate one_shot_learn(const cv::Mat& sketch, const TemplateMeta& meta, const V1Params& v1,
                              double floor) {
  cv::Mat input = sketch;
  if (sketch.cols != kCanonicalPx || sketch.rows != kCanonicalPx) {
    cv::resize(sketch, input, cv::Size(kCanonicalPx, kCanonicalPx), 0, 0, cv::INTER_LINEAR);
  }
  const FeatureStack pooled = v1_pool(v1_simple(input, v1), v1.pool_factor);
  return crop_template(pooled, meta, floor);
}

TemplateBank learn_bank(const std::filesystem::path& dir, const V1Params& v1) {
  TemplateBank bank;
  bank.v1 = v1;
  for (const auto& m : bank_layout()) {
    const auto path = dir / sketch_name(m);
    if (!std::filesystem::exists(path)) throw DataError("missing sketch: " + path.string());
    TemplateMeta meta = m;
    meta.source = path.filename().string();
    bank.templates.push_back(one_shot_learn(read_gray(path), meta, v1));
  }
  return bank;
}

TemplateBank learn_default_bank(const V1Params& v1) {
  TemplateBank bank;
  bank.v1 = v1;
  for (const auto& m : bank_layout()) {
    TemplateMeta meta = m;
    meta.source = sketch_name(m);
    bank.templates.push_back(one_shot_learn(make_sketch(m), meta, v1));
  }
  return bank;
}

void save_bank(const std::filesystem::path& path, const TemplateBank& bank) {
  Archive ar;
  nlohmann::json meta;
  meta["kind"] = "template-bank";
  meta["v1"] = v1_json(bank.v1);
  meta["templates"] = nlohmann::json::array();
  for (std::size_t i = 0; i < bank.templates.size(); ++i) {
    const auto& t = bank.templates[i];
    meta["templates"].push_back(
        {{"orientation", t.meta.orientation == Orientation::kHorizontal ? "H" : "V"},
         {"width_class", t.meta.width_class},
         {"polarity", polarity_name(t.meta.polarity)},
         {"source", t.meta.source}});
    Tensor w;
    w.shape = {static_cast<std::uint32_t>(t.weights.size()), static_cast<std::uint32_t>(t.height()),
               static_cast<std::uint32_t>(t.width())};
    for (const auto& p : t.weights) w.data.insert(w.data.end(), p.values().begin(), p.values().end());
    ar.tensors.emplace_back("template" + std::to_string(i), std::move(w));
  }
  ar.metadata = meta.dump();
  write_archive(path, ar);
}

TemplateBank load_bank(const std::filesystem::path& path) {
  const Archive ar = read_archive(path);
  TemplateBank bank;
  try {
    const auto meta = nlohmann::json::parse(ar.metadata);
    if (meta.value("kind", "") != "template-bank") throw DataError("not a template bank: " + path.string());
    const auto& v = meta.at("v1");
    bank.v1.n_orientations = v.at("n_orientations").get<int>();
    bank.v1.wavelengths = v.at("wavelengths").get<std::vector<double>>();
    bank.v1.sigma_per_wavelength = v.at("sigma_per_wavelength").get<double>();
    bank.v1.aspect = v.at("aspect").get<double>();
    bank.v1.pool_factor = v.at("pool_factor").get<int>();
    bank.v1.color_enabled = v.at("color_enabled").get<bool>();
    const auto& ts = meta.at("templates");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      StreetTemplate t;
      t.meta.orientation = ts[i].at("orientation").get<std::string>() == "H" ? Orientation::kHorizontal
                                                                           : Orientation::kVertical;
      t.meta.width_class = ts[i].at("width_class").get<int>();
      t.meta.polarity = ts[i].at("polarity").get<std::string>() == "dark-street" ? Polarity::kDarkStreet
                                                                               : Polarity::kLightStreet;
      t.meta.source = ts[i].at("source").get<std::string>();
      if (t.meta.width_class < 1 || t.meta.width_class > 3) throw DataError("bad width class");
      const Tensor& w = ar.get("template" + std::to_string(i));
      if (w.shape.size() != 3) throw DataError("template tensor must have rank 3");
      const int h = static_cast<int>(w.shape[1]);
      const int wd = static_cast<int>(w.shape[2]);
      for (std::uint32_t f = 0; f < w.shape[0]; ++f) {
        ImagePlane p(wd, h);
        std::copy_n(w.data.begin() + static_cast<std::ptrdiff_t>(f) * h * wd, h * wd, p.values().begin());
        t.weights.push_back(std::move(p));
      }
      bank.templates.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("template bank metadata: " + std::string(e.what()));
  }
  bank.v1.validate();
  return bank;
}

}  // namespace wafer
