#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "greenlab/polygon.hpp"
#include "greenlab/vec2.hpp"

namespace greenlab {

// Ordered JSON keeps key order stable so serialized reports are
// byte-reproducible across runs.
using json = nlohmann::ordered_json;

std::string read_text_file(const std::string& path);
// Creates parent directories as needed.
void write_text_file(const std::string& path, const std::string& text);

// Canonical serialization used for every JSON artifact.
std::string json_dump(const json& j);

// Domain files: {"name": ..., "vertices": [[x,y],...],
//   "flatness": {"gamma","R0"}?, "lipschitz": {"L","R0"}?}
// Unknown keys are rejected.
json domain_to_json(const PolygonalDomain& dom, const std::string& name = "");
PolygonalDomain domain_from_json(const json& j);
PolygonalDomain load_domain(const std::string& path);

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

// Minimal deterministic SVG line/scatter chart.
struct Series {
  std::string label;
  std::vector<Vec2> pts;
  bool line = true;  // false: markers only
};

std::string svg_chart(const std::string& title, const std::string& xlabel,
                      const std::string& ylabel,
                      const std::vector<Series>& series, int width = 720,
                      int height = 480);

}  // namespace greenlab
