#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "liftlab/graph.hpp"
#include "liftlab/primitives.hpp"

namespace liftlab {

enum class LiftMode { Dense, Sparse };

struct PrimitiveSpec {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
};

struct BaseVertexSpec {
    std::string label;
    int y_dim = 1;
    PrimitiveSpec sigma;   // empty name for initial vertices
    bool initial = false;
    bool terminal = false;
    int lift_dim = 1;
};

struct BaseEdgeSpec {
    int src = 0;
    int dst = 0;
    int w_dim = 1;
    int z_dim = 1;
    PrimitiveSpec m;
    LiftMode lift_mode = LiftMode::Sparse;
    double lambda = 1.0;
    double init_mean = 0.0;
    double init_scale = 1.0;
};

struct InputName {
    std::string name;
    int vertex = 0;
};

// Plain description of a module blueprint before validation.
struct BlueprintSpec {
    std::vector<BaseVertexSpec> vertices;
    std::vector<BaseEdgeSpec> edges;
    // Names for initial vertices. Initial vertices without any listed name get
    // lift_dim names "<label>:<i>".
    std::vector<InputName> inputs;
};

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
    std::string describe() const;
};

// A validated blueprint. Base edges are indexed by their id in `graph`.
class Blueprint {
public:
    const Graph& graph() const { return graph_; }
    int num_vertices() const { return graph_.num_vertices(); }
    int num_edges() const { return graph_.num_edges(); }

    const BaseVertexSpec& vertex(int b) const { return vertices_[b]; }
    const BaseEdgeSpec& edge(int e) const { return edges_[e]; }
    bool is_input(int b) const { return vertices_[b].initial; }
    bool is_terminal(int b) const { return vertices_[b].terminal; }
    std::span<const int> inputs() const { return initial_; }
    std::span<const int> terminals() const { return terminal_; }

    int y_dim(int b) const { return vertices_[b].y_dim; }
    int w_dim(int e) const { return edges_[e].w_dim; }
    int z_dim(int e) const { return edges_[e].z_dim; }

    const EdgeOp& m(int e) const { return *m_[e]; }
    const VertexOp& sigma(int b) const { return *sigma_[b]; }

    // Index of the source of base edge e among the parents of its target,
    // i.e. the argument slot of sigma at the target.
    int parent_slot(int e) const { return slot_[e]; }

    // The name set with its typing map to input vertices.
    std::span<const InputName> names() const { return names_; }
    int num_names() const { return static_cast<int>(names_.size()); }
    // Name indices of input vertex b, in declaration order.
    std::span<const int> names_of(int b) const { return names_of_[b]; }
    int find_name(const std::string& name) const;

    const BlueprintSpec& spec() const { return spec_; }

    // True when every primitive in use is differentiable everywhere.
    bool smooth() const;

    friend Blueprint build_blueprint(BlueprintSpec spec);

private:
    BlueprintSpec spec_;
    Graph graph_;
    std::vector<BaseVertexSpec> vertices_;
    std::vector<BaseEdgeSpec> edges_;
    std::vector<int> initial_, terminal_;
    std::vector<std::shared_ptr<const EdgeOp>> m_;
    std::vector<std::shared_ptr<const VertexOp>> sigma_;
    std::vector<int> slot_;
    std::vector<InputName> names_;
    std::vector<std::vector<int>> names_of_;
};

ValidationReport validate_blueprint(const BlueprintSpec& spec);

// Throws ValidationError listing every problem found.
Blueprint build_blueprint(BlueprintSpec spec);

// JSON form: {"vertices": [...], "edges": [...], "inputs": {name: vertex}}.
// Throws ParseError with the offending field path.
BlueprintSpec parse_blueprint(const nlohmann::json& j);
nlohmann::json blueprint_to_json(const BlueprintSpec& spec);
Blueprint load_blueprint(const std::string& path);

}  // namespace liftlab
