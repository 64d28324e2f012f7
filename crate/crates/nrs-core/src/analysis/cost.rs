//! Exact parameter and multiply-accumulate accounting.
//!
//! MAC counts are per sample for one forward pass; a multiply-accumulate is
//! reported both as 1 MAC and as 2 FLOPs. Conventions for layers the closed
//! forms do not cover: an FC layer costs `in * out` MACs (bias adds are not
//! multiplies), inference batch norm costs `2 * channels` (scale and shift
//! per channel).

use serde::Serialize;

use crate::net::network::NrsNetwork;
use crate::net::ExpansionMode;

#[derive(Debug, Clone, Serialize)]
pub struct LayerCost {
    pub name: String,
    pub params: u64,
    pub macs: u64,
}

/// The convolution stage against its two hypothetical baselines on the same
/// shapes: a standard convolution and a same-group-count convolution that
/// keeps the full `h_in x h_in` output map.
#[derive(Debug, Clone, Serialize)]
pub struct ConvComparison {
    pub kernel: u64,
    pub h_in: u64,
    pub c_in: u64,
    pub c_out: u64,
    pub n_per: u64,
    pub groups: u64,
    pub standard_params: u64,
    pub standard_macs: u64,
    pub grouped_params: u64,
    pub grouped_macs: u64,
    pub actual_params: u64,
    pub actual_macs: u64,
    /// standard / actual, exact when it divides evenly.
    pub param_reduction_vs_standard: Option<u64>,
    pub mac_reduction_vs_standard: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    pub layers: Vec<LayerCost>,
    pub total_params: u64,
    pub total_macs: u64,
    pub total_flops: u64,
    pub conv: ConvComparison,
}

fn exact_ratio(num: u64, den: u64) -> Option<u64> {
    (den != 0 && num % den == 0).then(|| num / den)
}

/// Counts parameters and per-sample MACs for every stage of `net`.
pub fn count_costs(net: &NrsNetwork) -> CostReport {
    let plan = &net.plan;
    let k = net.conv.n_h as u64;
    let h_in = net.conv.n_h as u64;
    let c = plan.channels() as u64;
    let n_per = net.conv.n_per as u64;
    let groups = c / n_per;
    let hidden = net.fc1.out_dim() as u64;
    let d = plan.d as u64;
    let m = plan.m() as u64;
    let out_dim = net.fc2.out_dim() as u64;

    let (exp_params, exp_macs) = match net.expansion_mode {
        // the permutation expansion is a gather: no parameters, no MACs
        ExpansionMode::Permute => (0, 0),
        _ => (m * d * d, m * d * d),
    };

    let conv_params = k * k * n_per * c + net.conv.bias.as_ref().map_or(0, |_| c);
    let conv_macs = k * k * n_per * c;

    let layers = vec![
        LayerCost {
            name: format!("expansion ({})", net.expansion_mode.name()),
            params: exp_params,
            macs: exp_macs,
        },
        LayerCost {
            name: "conv".into(),
            params: conv_params,
            macs: conv_macs,
        },
        LayerCost {
            name: "bn1".into(),
            params: 2 * c,
            macs: 2 * c,
        },
        LayerCost {
            name: "fc1".into(),
            params: c * hidden + net.fc1.bias.as_ref().map_or(0, |_| hidden),
            macs: c * hidden,
        },
        LayerCost {
            name: "bn2".into(),
            params: 2 * hidden,
            macs: 2 * hidden,
        },
        LayerCost {
            name: "fc2".into(),
            params: hidden * out_dim + net.fc2.bias.as_ref().map_or(0, |_| out_dim),
            macs: hidden * out_dim,
        },
    ];

    let standard_params = k * k * c * c;
    let standard_macs = k * k * h_in * h_in * c * c;
    let conv = ConvComparison {
        kernel: k,
        h_in,
        c_in: c,
        c_out: c,
        n_per,
        groups,
        standard_params,
        standard_macs,
        grouped_params: standard_params / groups,
        grouped_macs: standard_macs / groups,
        actual_params: conv_params,
        actual_macs: conv_macs,
        param_reduction_vs_standard: exact_ratio(standard_params, conv_params),
        mac_reduction_vs_standard: exact_ratio(standard_macs, conv_macs),
    };

    let total_params = layers.iter().map(|l| l.params).sum();
    let total_macs = layers.iter().map(|l| l.macs).sum();
    CostReport {
        layers,
        total_params,
        total_macs,
        total_flops: 2 * total_macs,
        conv,
    }
}

impl CostReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<24} {:>14} {:>14} {:>14}\n",
            "layer", "params", "MACs", "FLOPs"
        ));
        for layer in &self.layers {
            out.push_str(&format!(
                "{:<24} {:>14} {:>14} {:>14}\n",
                layer.name,
                layer.params,
                layer.macs,
                2 * layer.macs
            ));
        }
        out.push_str(&format!(
            "{:<24} {:>14} {:>14} {:>14}\n",
            "total", self.total_params, self.total_macs, self.total_flops
        ));
        let c = &self.conv;
        out.push_str(&format!(
            "\nconv vs standard conv on {}x{}x{} -> {}: params {} vs {}, MACs {} vs {}\n",
            c.h_in, c.h_in, c.c_in, c.c_out, c.actual_params, c.standard_params, c.actual_macs,
            c.standard_macs
        ));
        if let (Some(p), Some(m)) = (c.param_reduction_vs_standard, c.mac_reduction_vs_standard) {
            out.push_str(&format!("reduction: params {p}x, MACs {m}x\n"));
        }
        out
    }
}
