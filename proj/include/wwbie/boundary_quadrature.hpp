#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wwbie/geometry.hpp"
#include "wwbie/pml.hpp"
#include "wwbie/quadrature.hpp"

namespace wwbie {

/// Composite Gauss-Legendre quadrature over a boundary mesh with the
/// stretching data cached per node. Nodes are stored panel-major; the exact
/// linear indexing is private to the index/panel_of/local_of maps.
struct BoundaryQuadrature {
    struct Node {
        Vec2 x;
        double w = 0.0;  // arclength-scaled weight
        Vec2 n;
        PartTag tag = PartTag::obstacle;
        Complex tau, tau_prime;
    };

    ReferenceRule rule;
    std::vector<Panel> panels;
    std::vector<Node> nodes;

    int order() const { return rule.order; }
    std::size_t size() const { return nodes.size(); }
    std::size_t index(std::size_t panel, int p) const {
        return panel * std::size_t(rule.order) + std::size_t(p);
    }
    std::size_t panel_of(std::size_t i) const { return i / std::size_t(rule.order); }
    int local_of(std::size_t i) const { return int(i % std::size_t(rule.order)); }
};

inline BoundaryQuadrature composite_quadrature(const BoundaryMesh& mesh,
                                               const ReferenceRule& rule,
                                               const StretchingPath& path) {
    BoundaryQuadrature quad;
    quad.rule = rule;
    quad.panels = mesh.panels;
    quad.nodes.reserve(mesh.panels.size() * rule.order);
    for (const auto& panel : mesh.panels) {
        for (int p = 0; p < rule.order; ++p) {
            const double u = rule.nodes[p];
            BoundaryQuadrature::Node node;
            node.x = panel.chi(u);
            Vec2 t = panel.dchi(u);
            double speed = t.norm();
            if (!(speed > 0.0))
                throw std::runtime_error("composite_quadrature: degenerate panel derivative");
            node.w = rule.weights[p] * speed;
            node.n = panel.normal(u);
            node.tag = panel.tag;
            node.tau = path.tau(node.x.x());
            node.tau_prime = path.tau_prime(node.x.x());
            quad.nodes.push_back(node);
        }
    }
    return quad;
}

}  // namespace wwbie
