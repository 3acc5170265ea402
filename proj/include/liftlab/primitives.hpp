#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace liftlab {

using Vec = std::span<const double>;
using MutVec = std::span<double>;

// Edge primitive M : W x Y -> Z.
class EdgeOp {
public:
    virtual ~EdgeOp() = default;
    virtual std::string name() const = 0;

    // Empty when W x Y -> Z has dimensions this primitive accepts, otherwise
    // a human-readable reason.
    virtual std::string check_signature(int w_dim, int y_dim, int z_dim) const = 0;

    // z is overwritten.
    virtual void eval(Vec w, Vec y, MutVec z) const = 0;
    // ct_w and ct_y are accumulated into.
    virtual void vjp(Vec w, Vec y, Vec ct_z, MutVec ct_w, MutVec ct_y) const = 0;
    // dz is overwritten.
    virtual void jvp(Vec w, Vec y, Vec dw, Vec dy, MutVec dz) const = 0;

    // Upper bound on |M(w', y') - M(w, y)| over |w' - w| <= eta, |y' - y| <= r,
    // Euclidean norms throughout.
    virtual double deviation_bound(Vec w, Vec y, double eta, double r) const = 0;

    virtual bool smooth() const { return true; }
};

// Vertex primitive sigma : prod_a Z_a -> Y, one argument per base parent class
// in ascending base vertex order.
using ClassArgs = std::span<const Vec>;
using MutClassArgs = std::span<const MutVec>;

class VertexOp {
public:
    virtual ~VertexOp() = default;
    virtual std::string name() const = 0;
    virtual std::string check_signature(std::span<const int> class_dims, int y_dim) const = 0;

    virtual void eval(ClassArgs z, MutVec y) const = 0;
    // ct_z entries are overwritten.
    virtual void vjp(ClassArgs z, Vec ct_y, MutClassArgs ct_z) const = 0;
    virtual void jvp(ClassArgs z, ClassArgs dz, MutVec dy) const = 0;

    // Upper bound on |sigma(z') - sigma(z)| when class argument a moves by at
    // most radii[a].
    virtual double deviation_bound(ClassArgs z, std::span<const double> radii) const = 0;

    virtual bool smooth() const { return true; }
};

std::shared_ptr<const EdgeOp> make_edge_op(const std::string& name,
                                           const nlohmann::json& params = nlohmann::json::object());
std::shared_ptr<const VertexOp> make_vertex_op(const std::string& name,
                                               const nlohmann::json& params = nlohmann::json::object());

struct PrimitiveRef {
    std::shared_ptr<const EdgeOp> edge;      // set for edge primitives
    std::shared_ptr<const VertexOp> vertex;  // set for vertex primitives
};

// Looks a name up in both tables. Throws UnknownPrimitive.
PrimitiveRef registry_lookup(const std::string& name,
                             const nlohmann::json& params = nlohmann::json::object());

std::vector<std::string> edge_op_names();
std::vector<std::string> vertex_op_names();

}  // namespace liftlab
