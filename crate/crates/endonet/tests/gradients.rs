//! Finite-difference oracle for the combined loss through the full two-head
//! graph, concat layer included.

use endonet::{
    phase_loss, phase_loss_with_grads, tool_loss, tool_loss_with_grads, total_loss,
    EndoNetConfig, LossWeights, PhaseLogits, PhaseTarget, ToolConfidence, ToolTarget,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tensor_net::{NetworkState, Tensor};

struct Batch {
    inputs: Vec<Tensor>,
    tools: Vec<ToolTarget>,
    phases: Vec<PhaseTarget>,
}

fn random_batch(dim: usize, n: usize, seed: u64) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = (0..n)
        .map(|_| {
            Tensor::from_vec(
                &[dim],
                (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect(),
            )
            .unwrap()
        })
        .collect();
    let tools = (0..n)
        .map(|_| {
            let mut t = [false; 7];
            for b in &mut t {
                *b = rng.gen_bool(0.4);
            }
            ToolTarget(t)
        })
        .collect();
    let phases = (0..n)
        .map(|_| PhaseTarget::new(rng.gen_range(0..7)).unwrap())
        .collect();
    Batch {
        inputs,
        tools,
        phases,
    }
}

fn batch_logits(net: &NetworkState, batch: &Batch) -> (Vec<ToolConfidence>, Vec<PhaseLogits>) {
    let fc_tool = net.spec().layer_index("fc_tool").unwrap();
    let fc_phase = net.spec().layer_index("fc_phase").unwrap();
    let mut tools = Vec::new();
    let mut phases = Vec::new();
    for input in &batch.inputs {
        let acts = net.forward(input).unwrap();
        let mut vt = [0.0; 7];
        vt.copy_from_slice(acts.outputs[fc_tool].data());
        let mut wp = [0.0; 7];
        wp.copy_from_slice(acts.outputs[fc_phase].data());
        tools.push(ToolConfidence(vt));
        phases.push(PhaseLogits(wp));
    }
    (tools, phases)
}

fn combined_loss(net: &NetworkState, batch: &Batch, weights: &LossWeights) -> f64 {
    let (vt, wp) = batch_logits(net, batch);
    let lt = tool_loss(&vt, &batch.tools).unwrap();
    let lp = phase_loss(&wp, &batch.phases).unwrap();
    total_loss(lt, lp, weights).unwrap()
}

fn accumulate_analytic(net: &mut NetworkState, batch: &Batch, weights: &LossWeights) {
    let fc_tool = net.spec().layer_index("fc_tool").unwrap();
    let fc_phase = net.spec().layer_index("fc_phase").unwrap();
    let (vt, wp) = batch_logits(net, batch);
    let (_, tg) = tool_loss_with_grads(&vt, &batch.tools).unwrap();
    let (_, pg) = phase_loss_with_grads(&wp, &batch.phases).unwrap();
    net.zero_grads();
    for ((input, tgi), pgi) in batch.inputs.iter().zip(&tg).zip(&pg) {
        let acts = net.forward(input).unwrap();
        let seeds = vec![
            (
                fc_tool,
                Tensor::from_vec(&[7], tgi.iter().map(|v| v * weights.a).collect()).unwrap(),
            ),
            (
                fc_phase,
                Tensor::from_vec(&[7], pgi.iter().map(|v| v * weights.b).collect()).unwrap(),
            ),
        ];
        net.backward_seeded(&acts, &seeds).unwrap();
    }
}

/// Max relative error between analytic and central-difference gradients at
/// `n_checks` random parameter coordinates.
fn max_rel_error(
    net: &mut NetworkState,
    batch: &Batch,
    weights: &LossWeights,
    n_checks: usize,
    seed: u64,
) -> f64 {
    accumulate_analytic(net, batch, weights);
    let analytic: Vec<f64> = (0..net.n_layers())
        .flat_map(|i| net.grads(i).iter().flat_map(|t| t.data().to_vec()))
        .collect::<Vec<_>>();
    let theta = net.flat_params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel = 0.0_f64;
    for _ in 0..n_checks {
        let k = rng.gen_range(0..theta.len());
        let h = 1e-5 * theta[k].abs().max(1.0);
        net.set_flat_param(k, theta[k] + h);
        let up = combined_loss(net, batch, weights);
        net.set_flat_param(k, theta[k] - h);
        let down = combined_loss(net, batch, weights);
        net.set_flat_param(k, theta[k]);
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic[k].abs().max(numeric.abs()).max(1e-6);
        max_rel = max_rel.max((analytic[k] - numeric).abs() / denom);
    }
    max_rel
}

#[test]
fn combined_loss_gradients_match_finite_differences() {
    for seed in 0..5u64 {
        let config = EndoNetConfig {
            input_shape: vec![6],
            feature_width: 8,
            hidden_width: 10,
            conv_channels: (2, 3),
            head_lr_mult: 10.0,
        };
        let mut net = NetworkState::init(config.full_spec(), seed).unwrap();
        let batch = random_batch(6, 3, 100 + seed);
        let weights = LossWeights::multi_task();
        let err = max_rel_error(&mut net, &batch, &weights, 100, 200 + seed);
        assert!(err < 1e-4, "seed {seed}: max relative error {err}");
    }
}

#[test]
fn single_task_gradients_also_pass(){
    let config = EndoNetConfig {
        input_shape: vec![5],
        feature_width: 6,
        hidden_width: 8,
        conv_channels: (2, 3),
        head_lr_mult: 10.0,
    };
    for (a, b) in [(1.0, 0.0), (0.0, 1.0)] {
        let weights = LossWeights::new(a, b).unwrap();
        let mut net = NetworkState::init(config.full_spec(), 3).unwrap();
        let batch = random_batch(5, 2, 17);
        let err = max_rel_error(&mut net, &batch, &weights, 80, 31);
        assert!(err < 1e-4, "weights ({a},{b}): max relative error {err}");
    }
}
