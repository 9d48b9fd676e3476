#pragma once

// A minimal SVG writer. Coordinates are printed with two decimals so output
// is byte-stable.

#include <string>
#include <string_view>

namespace oodenv {

class Svg {
 public:
  Svg(double width, double height);

  void rect(double x, double y, double w, double h, std::string_view fill,
            std::string_view stroke = "none");
  void line(double x1, double y1, double x2, double y2, std::string_view stroke,
            double width = 1.0, bool dashed = false);
  void circle(double cx, double cy, double r, std::string_view fill);
  /// anchor: "start", "middle" or "end".
  void text(double x, double y, std::string_view content, double size = 11.0,
            std::string_view anchor = "start", double rotate = 0.0);

  std::string str() const;

 private:
  double width_, height_;
  std::string body_;
};

std::string xml_escape(std::string_view s);

}  // namespace oodenv
