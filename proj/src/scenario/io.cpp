// Copyright 2026 The revsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "revsim/scenario/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "revsim/common/angle.hpp"
#include "revsim/common/errors.hpp"

namespace revsim::scenario
{
namespace
{

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

std::string where(const std::string & field, int index)
{
  return index >= 0 ? field + "[" + std::to_string(index) + "]" : field;
}

void reject_unknown_keys(const Json & obj, const std::set<std::string> & allowed,
                         const std::string & context, int index)
{
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ParseError("unknown key '" + it.key() + "' in " + where(context, index));
    }
  }
}

const Json & require(const Json & obj, const std::string & key, const std::string & context,
                     int index)
{
  if (!obj.is_object()) {
    throw ParseError(where(context, index) + " is not an object");
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError("missing field '" + key + "' in " + where(context, index));
  }
  return *it;
}

double number(const Json & v, const std::string & field, int index)
{
  if (!v.is_number()) {
    throw ParseError("field '" + field + "' at index " + std::to_string(index) + " is not a number");
  }
  return v.get<double>();
}

std::string string_field(const Json & v, const std::string & field, int index)
{
  if (!v.is_string()) {
    throw ParseError("field '" + field + "' at index " + std::to_string(index) + " is not a string");
  }
  return v.get<std::string>();
}

Point2 point(const Json & v, const std::string & field, int index)
{
  if (!v.is_array() || v.size() != 2) {
    throw ParseError("field '" + field + "' at index " + std::to_string(index) +
                     " must be an [x, y] pair");
  }
  return {number(v[0], field, index), number(v[1], field, index)};
}

AgentState parse_state(const Json & j, int agent_index)
{
  reject_unknown_keys(j, {"valid", "x", "y", "heading", "speed", "vx", "vy"}, "states",
                      agent_index);
  AgentState st;
  const Json & valid = require(j, "valid", "states", agent_index);
  if (!valid.is_boolean()) {
    throw ParseError("field 'valid' at index " + std::to_string(agent_index) + " is not a bool");
  }
  st.valid = valid.get<bool>();
  st.x = number(require(j, "x", "states", agent_index), "x", agent_index);
  st.y = number(require(j, "y", "states", agent_index), "y", agent_index);
  st.heading =
    normalize_angle(number(require(j, "heading", "states", agent_index), "heading", agent_index));
  const bool has_speed = j.contains("speed");
  const bool has_vel = j.contains("vx") || j.contains("vy");
  if (has_speed && has_vel) {
    throw SchemaError("speed", agent_index, "give either speed or vx/vy, not both");
  }
  if (has_speed) {
    st.speed = number(j.at("speed"), "speed", agent_index);
  } else if (has_vel) {
    const double vx = number(require(j, "vx", "states", agent_index), "vx", agent_index);
    const double vy = number(require(j, "vy", "states", agent_index), "vy", agent_index);
    st.speed = vx * std::cos(st.heading) + vy * std::sin(st.heading);
  } else {
    throw ParseError("missing field 'speed' in states[" + std::to_string(agent_index) + "]");
  }
  return st;
}

Scenario from_json(const Json & root)
{
  if (!root.is_object()) {
    throw ParseError("scenario root is not an object");
  }
  reject_unknown_keys(root, {"scenario_id", "dt", "num_steps", "map", "traffic_lights", "agents"},
                      "scenario", -1);
  Scenario s;
  s.scenario_id = string_field(require(root, "scenario_id", "scenario", -1), "scenario_id", -1);
  s.dt = number(require(root, "dt", "scenario", -1), "dt", -1);
  const Json & ns = require(root, "num_steps", "scenario", -1);
  if (!ns.is_number_integer()) {
    throw ParseError("field 'num_steps' is not an integer");
  }
  s.num_steps = ns.get<int>();

  const Json & map = require(root, "map", "scenario", -1);
  if (!map.is_array()) throw ParseError("field 'map' is not an array");
  for (std::size_t i = 0; i < map.size(); ++i) {
    const int idx = static_cast<int>(i);
    reject_unknown_keys(map[i], {"kind", "points"}, "map", idx);
    MapPolyline pl;
    const auto kind = polyline_kind_from_string(string_field(require(map[i], "kind", "map", idx), "kind", idx));
    if (!kind) throw SchemaError("map.kind", idx, "unknown polyline kind");
    pl.kind = *kind;
    const Json & pts = require(map[i], "points", "map", idx);
    if (!pts.is_array()) throw ParseError("field 'points' at index " + std::to_string(idx) + " is not an array");
    for (const auto & p : pts) pl.points.push_back(point(p, "points", idx));
    s.map.push_back(std::move(pl));
  }

  const Json & lights = require(root, "traffic_lights", "scenario", -1);
  if (!lights.is_array()) throw ParseError("field 'traffic_lights' is not an array");
  for (std::size_t i = 0; i < lights.size(); ++i) {
    const int idx = static_cast<int>(i);
    reject_unknown_keys(lights[i], {"position", "states"}, "traffic_lights", idx);
    TrafficLight tl;
    tl.position = point(require(lights[i], "position", "traffic_lights", idx), "position", idx);
    const Json & sts = require(lights[i], "states", "traffic_lights", idx);
    if (!sts.is_array()) throw ParseError("field 'states' at index " + std::to_string(idx) + " is not an array");
    for (const auto & st : sts) {
      const auto ls = light_state_from_string(string_field(st, "states", idx));
      if (!ls) throw SchemaError("traffic_lights.states", idx, "unknown light state");
      tl.states.push_back(*ls);
    }
    s.traffic_lights.push_back(std::move(tl));
  }

  const Json & agents = require(root, "agents", "scenario", -1);
  if (!agents.is_array()) throw ParseError("field 'agents' is not an array");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const int idx = static_cast<int>(i);
    const Json & a = agents[i];
    reject_unknown_keys(a, {"id", "kind", "length", "width", "height", "is_ego", "states"}, "agents", idx);
    AgentTrack t;
    t.id = string_field(require(a, "id", "agents", idx), "id", idx);
    const auto kind = agent_kind_from_string(string_field(require(a, "kind", "agents", idx), "kind", idx));
    if (!kind) throw SchemaError("kind", idx, "unknown agent kind");
    t.kind = *kind;
    t.length = number(require(a, "length", "agents", idx), "length", idx);
    t.width = number(require(a, "width", "agents", idx), "width", idx);
    t.height = number(require(a, "height", "agents", idx), "height", idx);
    const Json & ego = require(a, "is_ego", "agents", idx);
    if (!ego.is_boolean()) throw ParseError("field 'is_ego' at index " + std::to_string(idx) + " is not a bool");
    t.is_ego = ego.get<bool>();
    const Json & sts = require(a, "states", "agents", idx);
    if (!sts.is_array()) throw ParseError("field 'states' at index " + std::to_string(idx) + " is not an array");
    for (const auto & st : sts) t.states.push_back(parse_state(st, idx));
    s.agents.push_back(std::move(t));
  }
  validate(s);
  return s;
}

}  // namespace

Scenario parse_scenario(const std::string & text)
{
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error & e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  return from_json(root);
}

Scenario load_scenario(const std::filesystem::path & path)
{
  return parse_scenario(read_file(path));
}

std::string read_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string serialize_scenario(const Scenario & s)
{
  OrderedJson root;
  root["scenario_id"] = s.scenario_id;
  root["dt"] = s.dt;
  root["num_steps"] = s.num_steps;
  root["map"] = OrderedJson::array();
  for (const auto & pl : s.map) {
    OrderedJson j;
    j["kind"] = to_string(pl.kind);
    j["points"] = OrderedJson::array();
    for (const auto & p : pl.points) j["points"].push_back({p.x, p.y});
    root["map"].push_back(std::move(j));
  }
  root["traffic_lights"] = OrderedJson::array();
  for (const auto & tl : s.traffic_lights) {
    OrderedJson j;
    j["position"] = {tl.position.x, tl.position.y};
    j["states"] = OrderedJson::array();
    for (auto st : tl.states) j["states"].push_back(to_string(st));
    root["traffic_lights"].push_back(std::move(j));
  }
  root["agents"] = OrderedJson::array();
  for (const auto & a : s.agents) {
    OrderedJson j;
    j["id"] = a.id;
    j["kind"] = to_string(a.kind);
    j["length"] = a.length;
    j["width"] = a.width;
    j["height"] = a.height;
    j["is_ego"] = a.is_ego;
    j["states"] = OrderedJson::array();
    for (const auto & st : a.states) {
      OrderedJson sj;
      sj["valid"] = st.valid;
      sj["x"] = st.x;
      sj["y"] = st.y;
      sj["heading"] = st.heading;
      sj["speed"] = st.speed;
      j["states"].push_back(std::move(sj));
    }
    root["agents"].push_back(std::move(j));
  }
  return root.dump(1) + "\n";
}

void write_file_atomic(const std::filesystem::path & path, const std::string & text)
{
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + path.string());
    }
    out << text;
    out.flush();
    if (!out) {
      throw IoError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

void save_scenario(const Scenario & s, const std::filesystem::path & path)
{
  write_file_atomic(path, serialize_scenario(s));
}

}  // namespace revsim::scenario
