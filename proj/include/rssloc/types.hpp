#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rssloc {

/// Raised for malformed or inconsistent configuration (files, specs, geometry).
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numeric argument lies outside the domain of a model function.
class DomainError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

using NodeId = int;

struct Position
{
  double x = 0.0;
  double y = 0.0;

  friend Position operator+(Position a, Position b) { return {a.x + b.x, a.y + b.y}; }
  friend Position operator-(Position a, Position b) { return {a.x - b.x, a.y - b.y}; }
  friend Position operator*(double s, Position a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Position a, Position b) { return a.x == b.x && a.y == b.y; }

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(Position a, Position b)
{
  return std::hypot(a.x - b.x, a.y - b.y);
}

enum class NodeRole { agent, anchor };

inline const char* to_string(NodeRole role)
{
  return role == NodeRole::agent ? "agent" : "anchor";
}

struct Node
{
  NodeId id = 0;
  NodeRole role = NodeRole::agent;
  Position position;
};

/// Axis-aligned rectangle, used for position priors and random layouts.
struct Rect
{
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool degenerate() const { return !(width() > 0.0) || !(height() > 0.0); }
  bool contains(Position p) const
  {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
};

/// Node layout plus the radio range that decides which pairs measure each other.
class NetworkGeometry
{
public:
  NetworkGeometry() = default;
  NetworkGeometry(std::vector<Node> nodes, double comm_range)
    : nodes_(std::move(nodes)), comm_range_(comm_range)
  {
    validate();
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  double comm_range() const { return comm_range_; }
  void set_comm_range(double range)
  {
    comm_range_ = range;
    validate();
  }

  std::size_t size() const { return nodes_.size(); }

  /// Index of a node id inside nodes(); throws ConfigError for unknown ids.
  std::size_t index_of(NodeId id) const
  {
    for (std::size_t k = 0; k < nodes_.size(); ++k)
      if (nodes_[k].id == id)
        return k;
    throw ConfigError("unknown node id " + std::to_string(id));
  }

  const Node& node(NodeId id) const { return nodes_[index_of(id)]; }

  std::vector<NodeId> agent_ids() const { return ids_with(NodeRole::agent); }
  std::vector<NodeId> anchor_ids() const { return ids_with(NodeRole::anchor); }

  Rect bounding_box() const
  {
    Rect r{nodes_.front().position.x, nodes_.front().position.y,
           nodes_.front().position.x, nodes_.front().position.y};
    for (const auto& n : nodes_) {
      r.x_min = std::min(r.x_min, n.position.x);
      r.y_min = std::min(r.y_min, n.position.y);
      r.x_max = std::max(r.x_max, n.position.x);
      r.y_max = std::max(r.y_max, n.position.y);
    }
    return r;
  }

private:
  std::vector<NodeId> ids_with(NodeRole role) const
  {
    std::vector<NodeId> out;
    for (const auto& n : nodes_)
      if (n.role == role)
        out.push_back(n.id);
    return out;
  }

  void validate() const
  {
    if (!(comm_range_ > 0.0))
      throw ConfigError("comm_range must be positive");
    bool any_anchor = false;
    for (std::size_t a = 0; a < nodes_.size(); ++a) {
      if (!nodes_[a].position.finite())
        throw ConfigError("node " + std::to_string(nodes_[a].id) + " has non-finite position");
      any_anchor = any_anchor || nodes_[a].role == NodeRole::anchor;
      for (std::size_t b = a + 1; b < nodes_.size(); ++b)
        if (nodes_[a].id == nodes_[b].id)
          throw ConfigError("duplicate node id " + std::to_string(nodes_[a].id));
    }
    if (!any_anchor)
      throw ConfigError("network needs at least one anchor");
  }

  std::vector<Node> nodes_;
  double comm_range_ = 1.0;
};

/// Log-distance channel constants. Per-node reference powers and per-edge noise
/// levels fall back to the global values when no override is present.
struct ChannelParams
{
  double ref_power_dbm = -30.0;
  double ref_distance = 1.0;
  double noise_std = 3.0;
  std::map<NodeId, double> ref_power_override;

  /// Reference power A_i of a node.
  double ref_power(NodeId id) const
  {
    auto it = ref_power_override.find(id);
    return it == ref_power_override.end() ? ref_power_dbm : it->second;
  }

  void validate() const
  {
    if (!(ref_distance > 0.0))
      throw ConfigError("ref_distance must be positive");
    if (!(noise_std > 0.0))
      throw ConfigError("noise_std must be positive");
  }
};

/// One RSS reading between nodes i < j.
struct Measurement
{
  NodeId i = 0;
  NodeId j = 0;
  double rss_dbm = 0.0;
  double sigma = 0.0;  ///< noise std of this edge, dB
};

struct MeasurementSet
{
  std::vector<Measurement> edges;
  std::vector<std::string> warnings;
};

/// Per-edge constants needed by every likelihood evaluation on that edge.
struct EdgeChannel
{
  double rss_dbm = 0.0;
  double ref_power_dbm = -30.0;
  double ref_distance = 1.0;
  double sigma = 3.0;
};

inline EdgeChannel edge_channel(const Measurement& m, const ChannelParams& params)
{
  return {m.rss_dbm, params.ref_power(std::min(m.i, m.j)), params.ref_distance, m.sigma};
}

}  // namespace rssloc
