use std::io::Write;

use crate::error::{Error, Result};
use crate::network::Network;

/// Edge function on a network. `edge_values[e]` is the flow from the lower
/// to the higher endpoint of edge `e`, so antisymmetry holds by construction.
#[derive(Clone, Debug)]
pub struct Flow {
    pub edge_values: Vec<f64>,
    pub source: Vec<usize>,
    pub sink: Vec<usize>,
    pub strength: f64,
}

impl Flow {
    pub fn zero(net: &Network, source: usize, sink: usize) -> Self {
        Flow {
            edge_values: vec![0.0; net.edge_count()],
            source: vec![source],
            sink: vec![sink],
            strength: 0.0,
        }
    }

    /// Unit flow along a walk `path[0] -> path[last]`.
    pub fn along_path(net: &Network, path: &[usize]) -> Result<Self> {
        let (first, last) = match (path.first(), path.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::Domain("empty path".into())),
        };
        let mut flow = Flow::zero(net, first, last);
        flow.strength = if first == last { 0.0 } else { 1.0 };
        for w in path.windows(2) {
            flow.push(net, w[0], w[1], 1.0)?;
        }
        Ok(flow)
    }

    /// Adds `amount` of flow from `u` to `v` across an edge joining them.
    pub fn push(&mut self, net: &Network, u: usize, v: usize, amount: f64) -> Result<()> {
        let e = net
            .edge_between(u, v)
            .ok_or_else(|| Error::Domain(format!("no edge between {u} and {v}")))?;
        self.push_edge(net, e, u, amount);
        Ok(())
    }

    pub(crate) fn push_edge(&mut self, net: &Network, e: usize, from: usize, amount: f64) {
        let (lo, _) = net.edge(e);
        if from == lo {
            self.edge_values[e] += amount;
        } else {
            self.edge_values[e] -= amount;
        }
    }

    /// Net outflow at every vertex.
    pub fn divergence(&self, net: &Network) -> Vec<f64> {
        let mut div = vec![0.0; net.vertex_count()];
        for (e, &(u, v)) in net.edges().iter().enumerate() {
            div[u as usize] += self.edge_values[e];
            div[v as usize] -= self.edge_values[e];
        }
        div
    }

    /// Largest conservation violation off the terminals, and the violation
    /// of the declared strength at source and sink.
    pub fn conservation_error(&self, net: &Network) -> f64 {
        let div = self.divergence(net);
        let mut worst: f64 = 0.0;
        for (v, dv) in div.iter().enumerate() {
            if !self.source.contains(&v) && !self.sink.contains(&v) {
                worst = worst.max(dv.abs());
            }
        }
        let out: f64 = self.source.iter().map(|&s| div[s]).sum();
        let inn: f64 = self.sink.iter().map(|&s| div[s]).sum();
        worst.max((out - self.strength).abs()).max((inn + self.strength).abs())
    }

    pub fn check(&self, net: &Network) -> Result<()> {
        if self.edge_values.len() != net.edge_count() {
            return Err(Error::CertificateInvalid("flow has the wrong length".into()));
        }
        let tol = 1e-9 * self.strength.abs().max(1e-3);
        let err = self.conservation_error(net);
        if err > tol {
            return Err(Error::CertificateInvalid(format!(
                "divergence violation {err:.3e} exceeds {tol:.1e}"
            )));
        }
        Ok(())
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.edge_values.iter_mut().for_each(|v| *v *= factor);
        self.strength *= factor;
        self
    }
}

/// `sum over edges of flow(e)^2`; for a unit flow this bounds the effective
/// resistance between its terminals from above.
pub fn flow_energy(net: &Network, flow: &Flow) -> Result<f64> {
    flow.check(net)?;
    Ok(flow.edge_values.iter().map(|v| v * v).sum())
}

/// Writes `edge,u,v,value` rows for every edge carrying flow. `label`
/// renders vertex ids.
pub fn write_flow_csv<W: Write>(
    net: &Network,
    flow: &Flow,
    label: impl Fn(usize) -> String,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["edge", "u", "v", "value"])?;
    for (e, &val) in flow.edge_values.iter().enumerate() {
        if val != 0.0 {
            let (u, v) = net.edge(e);
            w.write_record([e.to_string(), label(u), label(v), format!("{val:.17e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_flow_energy() {
        let net = Network::path(6);
        let flow = Flow::along_path(&net, &[0, 1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(flow_energy(&net, &flow).unwrap(), 6.0);
    }

    #[test]
    fn split_flow_energy() {
        // two disjoint paths of length 3 between 0 and 5
        let net = Network::new(6, &[(0, 1), (1, 2), (2, 5), (0, 3), (3, 4), (4, 5)]).unwrap();
        let a = Flow::along_path(&net, &[0, 1, 2, 5]).unwrap().scaled(0.5);
        let b = Flow::along_path(&net, &[0, 3, 4, 5]).unwrap().scaled(0.5);
        let mut flow = a.clone();
        for (x, y) in flow.edge_values.iter_mut().zip(&b.edge_values) {
            *x += y;
        }
        flow.strength = 1.0;
        assert!((flow_energy(&net, &flow).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn divergence_violation_rejected() {
        let net = Network::path(3);
        let mut flow = Flow::along_path(&net, &[0, 1, 2, 3]).unwrap();
        flow.edge_values[1] = 0.5;
        assert!(matches!(flow_energy(&net, &flow), Err(Error::CertificateInvalid(_))));
    }

    #[test]
    fn csv_lists_carrying_edges() {
        let net = Network::path(2);
        let flow = Flow::along_path(&net, &[2, 1, 0]).unwrap();
        let mut buf = Vec::new();
        write_flow_csv(&net, &flow, |v| v.to_string(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("0,0,1,-1"));
    }
}
