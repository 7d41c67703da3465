use pr2_core::approx::{Mlp, Squash};
use pr2_core::baselines::{DdpgAgent, OpponentPredictor};
use pr2_core::game::{Action, AgentTransition, State};
use pr2_core::learner::{ActorCriticParams, AgentRngs, Batch};
use pr2_core::pr2ac::{AmortizedSampler, Pr2acAgent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sq() -> Squash {
    Squash::new(-10.0, 10.0)
}

fn small_params() -> ActorCriticParams {
    ActorCriticParams {
        hidden: vec![16, 16],
        particles: 8,
        ..ActorCriticParams::default()
    }
}

fn record(own: f64, opp: f64, reward: f64) -> AgentTransition {
    AgentTransition {
        state: State::singleton(),
        own_action: Action::Continuous(own),
        opponent_action: Action::Continuous(opp),
        reward,
        next_state: State::singleton(),
    }
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, reward: impl Fn(f64, f64) -> f64) -> Batch {
    let records: Vec<AgentTransition> = (0..n)
        .map(|_| {
            let (a, o) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            record(a, o, reward(a, o))
        })
        .collect();
    Batch::from_records(&records.iter().collect::<Vec<_>>()).unwrap()
}

fn agent(params: &ActorCriticParams, seed: u64) -> Pr2acAgent {
    let mut init = ChaCha8Rng::seed_from_u64(seed);
    Pr2acAgent::new(1, sq(), sq(), params, &mut init, AgentRngs::seeded(seed)).unwrap()
}

/// A network whose only non-zero parameter is the output bias.
fn constant_net(sizes: &[usize], value: f64) -> Mlp {
    let mut net = Mlp::zeros(sizes);
    let n = net.n_params();
    net.params_mut()[n - 1] = value;
    net
}

#[test]
fn critic_target_with_constant_target_critic() {
    let params = ActorCriticParams {
        gamma: 0.9,
        ..small_params()
    };
    let mut a = agent(&params, 1);
    a.critic_target = constant_net(a.critic.net.sizes(), 2.0);
    let batch = Batch::from_records(&[&record(1.0, -1.0, 0.5), &record(3.0, 4.0, -1.0)]).unwrap();
    let y = a.critic_target(&batch).unwrap();
    // r + 0.9 * 2
    assert!((y[0] - 2.3).abs() < 1e-12);
    assert!((y[1] - 0.8).abs() < 1e-12);

    a.critic_target = Mlp::zeros(a.critic.net.sizes());
    assert_eq!(a.critic_target(&batch).unwrap(), vec![0.5, -1.0]);
}

#[test]
fn zero_discount_target_is_reward() {
    let mut a = agent(&small_params(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let batch = random_batch(&mut rng, 16, |x, y| x * y);
    assert_eq!(a.critic_target(&batch).unwrap(), batch.rewards);
}

#[test]
fn more_particles_concentrate_the_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let batch = random_batch(&mut rng, 4, |_, _| 0.0);
    let variance = |m: usize| {
        let params = ActorCriticParams {
            gamma: 0.9,
            particles: m,
            ..small_params()
        };
        let mut a = agent(&params, 4);
        let sampler_net = Mlp::new(&[3, 16, 1], &mut ChaCha8Rng::seed_from_u64(5));
        a.sampler = AmortizedSampler::from_net(sampler_net, 1, 1, sq(), sq(), 1e-3);
        let ys: Vec<f64> = (0..300).map(|_| a.critic_target(&batch).unwrap()[0]).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (ys.len() - 1) as f64
    };
    let (v1, v64) = (variance(1), variance(64));
    assert!(v1 > 0.0);
    assert!(v1 > 4.0 * v64, "var M=1 {v1}, var M=64 {v64}");
}

#[test]
fn critic_gradient_matches_differences() {
    let a = agent(&small_params(), 6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let batch = random_batch(&mut rng, 12, |x, y| (x - y) / 5.0);
    let targets: Vec<f64> = batch.rewards.clone();
    let (_, grads) = a.critic_loss(&batch, &targets).unwrap();
    let mut probe = a.clone();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..grads.len() {
        let base = probe.critic.net.params()[k];
        probe.critic.net.params_mut()[k] = base + h;
        let lp = probe.critic_loss(&batch, &targets).unwrap().0;
        probe.critic.net.params_mut()[k] = base - h;
        let lm = probe.critic_loss(&batch, &targets).unwrap().0;
        probe.critic.net.params_mut()[k] = base;
        let fd = (lp - lm) / (2.0 * h);
        worst = worst.max((fd - grads[k]).abs() / fd.abs().max(grads[k].abs()).max(1e-6));
    }
    assert!(worst < 1e-4, "relative error {worst}");
}

#[test]
fn critic_fit_and_fixed_point() {
    let mut a = agent(&small_params(), 8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let batch = random_batch(&mut rng, 32, |x, y| (x + y) / 10.0);
    let first = a.critic_step(&batch, &batch.rewards).unwrap();
    let mut last = first;
    for _ in 0..100 {
        last = a.critic_step(&batch, &batch.rewards).unwrap();
    }
    assert!(last < first, "loss {first} -> {last}");

    // Targets equal to the current predictions: zero gradient, and a fresh
    // optimizer has no momentum to move the parameters.
    let mut a = agent(&small_params(), 8);
    let x = pr2_core::learner::critic_inputs(
        batch.states.view(),
        &batch.own,
        Some(&batch.opp),
        sq(),
        sq(),
        1,
    );
    let own_values: Vec<f64> = a.critic.net.predict(x.view()).unwrap().iter().copied().collect();
    let before = a.critic.net.params().to_vec();
    a.critic_step(&batch, &own_values).unwrap();
    assert_eq!(a.critic.net.params(), &before[..]);
}

#[test]
fn actor_climbs_a_learned_quadratic() {
    let params = ActorCriticParams {
        actor_lr: 1e-3,
        critic_lr: 1e-3,
        reaction_gradient: false,
        ..small_params()
    };
    let mut a = agent(&params, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3000 {
        let batch = random_batch(&mut rng, 64, |x, _| -((x - 3.0) / 3.0).powi(2));
        a.critic_step(&batch, &batch.rewards).unwrap();
    }
    let batch = random_batch(&mut rng, 16, |_, _| 0.0);
    let s = State::singleton();
    let start = a.deterministic_action(&s).unwrap();
    for _ in 0..1500 {
        a.actor_step(&batch).unwrap();
    }
    let end = a.deterministic_action(&s).unwrap();
    assert!((end - 3.0).abs() < 0.5, "actor {start} -> {end}");
    assert!((end - 3.0).abs() < (start - 3.0).abs());
}

#[test]
fn soft_update_stays_within_online_history() {
    let mut a = agent(&small_params(), 12);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bound = a.actor.net.max_abs().max(a.actor_target.max_abs());
    for _ in 0..50 {
        for p in a.actor.net.params_mut() {
            *p += rng.random_range(-0.5..0.5);
        }
        bound = bound.max(a.actor.net.max_abs());
        a.soft_update().unwrap();
        assert!(a.actor_target.max_abs() <= bound + 1e-12);
    }
}

#[test]
fn predictor_regresses_to_a_constant_opponent() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let net = Mlp::new(&[1, 16, 16, 1], &mut rng);
    let mut p = OpponentPredictor::new(net, sq(), 1e-3);
    let states = ndarray::Array2::from_elem((32, 1), 1.0);
    let observed = vec![4.0; 32];
    for _ in 0..2000 {
        p.step(states.view(), &observed).unwrap();
    }
    let guess = p.predict(states.view()).unwrap();
    assert!(guess.iter().all(|g| (g - 4.0).abs() < 0.1), "{:?}", &guess[..2]);
}

#[test]
fn ddpg_critic_regresses_toward_rewards() {
    let params = small_params();
    for om in [false, true] {
        let mut init = ChaCha8Rng::seed_from_u64(15);
        let mut a = DdpgAgent::new(1, sq(), sq(), &params, om, &mut init, AgentRngs::seeded(15)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let batch = random_batch(&mut rng, 32, |x, _| x / 10.0);
        let y = a.critic_target(&batch).unwrap();
        assert_eq!(y, batch.rewards);
        let first = a.critic_step(&batch, &y).unwrap();
        let mut last = first;
        for _ in 0..100 {
            last = a.critic_step(&batch, &y).unwrap();
        }
        assert!(last < first, "opponent model {om}: {first} -> {last}");
    }
}
