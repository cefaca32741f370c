use std::fmt::Write;

use serde::Serialize;

use crate::curriculum::{least_squares_slope, Curriculum, RewardHistory};
use crate::mdp::EncodingSpec;
use crate::reward::{Primitive, GRAMMAR, MAX_DEPTH, MAX_LEN};
use crate::sim::EnvConfig;

/// Episodes of the current stage included in a review prompt.
pub const REVIEW_EPISODES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PromptKind {
    GenerateCurriculum,
    ReviewProgress,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub kind: PromptKind,
}

const SYSTEM_TEXT: &str = "You design training curricula for a reinforcement learning agent \
that controls user association in a cellular network. You answer with a single JSON object \
and nothing else. Reward functions are written in a small arithmetic expression language; \
never write program code.";

const STAGE_SCHEMA: &str = r#"{"name": string,
 "env": {"num_ues": integer, "num_bs": integer,
         "ue_velocity_range": [min_mps, max_mps],
         "episode_len": integer,
         "bs_positions": [[x, y], ...]   (optional)},
 "reward": expression string,
 "threshold": number,
 "window": integer,
 "max_env_steps": integer}"#;

fn primitives_text() -> String {
    let mut out = String::new();
    for p in Primitive::ALL {
        let _ = writeln!(out, "- {}(): {}", p.name(), p.description());
    }
    out
}

fn language_text() -> String {
    format!(
        "Reward expression language:\n{GRAMMAR}\n\
         NUMBER is a decimal literal. IDENT must be one of the primitives below. \
         Expressions are at most {MAX_LEN} bytes with at most {MAX_DEPTH} levels of nesting; \
         division by a value closer to zero than 1e-12 yields 0.\n\
         Primitives (evaluated on the network state after the agent's action):\n{}",
        primitives_text()
    )
}

fn rules_text(target: &EnvConfig, spec: &EncodingSpec) -> String {
    format!(
        "Rules:\n\
         - Every stage must have 1 <= num_ues <= {m} and 1 <= num_bs <= {n}.\n\
         - The last stage must have num_ues = {tm} and num_bs = {tn} (the target task).\n\
         - ue_velocity_range must satisfy 0 <= min <= max.\n\
         - bs_positions, if given, must list num_bs points inside the {w} m x {h} m area.\n\
         - threshold is compared with the mean, over the last `window` episodes, of the \
         per-episode average of the stage reward; the stage passes when the mean reaches it.\n\
         - window >= 1 and max_env_steps >= 1.\n\
         - Unknown keys are rejected.\n",
        m = spec.m_max,
        n = spec.n_max,
        tm = target.num_ues,
        tn = target.num_bs,
        w = target.area_width,
        h = target.area_height,
    )
}

fn environment_text(target: &EnvConfig, spec: &EncodingSpec) -> String {
    let bs = target.resolved_bs_positions();
    let positions: Vec<String> = bs.iter().map(|p| format!("({:.1}, {:.1})", p.x, p.y)).collect();
    let [vlo, vhi] = target.ue_velocity_range;
    let [slo, shi] = spec.sinr_norm_range_db;
    format!(
        "Environment:\n\
         - Area {w} m x {h} m with {n} base stations at {pos}.\n\
         - {m} user equipments (UEs) move by random waypoint at {vlo}..{vhi} m/s, one step = {dt} s, \
         episodes last {len} steps.\n\
         - Path loss follows the Okumura-Hata urban model ({f} MHz carrier, {hb} m BS antenna, \
         {hm} m UE antenna); BS transmit power {tx} dBm, bandwidth {bw} Hz, noise density \
         {noise} dBm/Hz{interf}.\n\
         - A UE may connect to several base stations at once; a link is only kept if its SINR \
         is at least {smin} (linear). A base station splits its bandwidth equally among its \
         connected UEs and each link gets the Shannon rate of its share.\n\
         - QoE of a link is log(rate / {dmin}) / log({dmax} / {dmin}), clipped to [0, 1].\n\
         \n\
         Agent interface:\n\
         - The observation is three {mm} x {nn} grids (UE rows, BS columns), zero-padded: \
         current association (0/1), SINR in dB scaled from [{slo}, {shi}] to [0, 1], and link QoE.\n\
         - The action is {pairs} independent bits, one per (UE, BS) slot; slots outside the \
         current stage's UEs and BSs are ignored. Requested links that fail the SINR gate are dropped.\n\
         \n\
         Target task objective: maximize mean_qoe(), the QoE summed over a UE's links and \
         averaged over UEs, on the {m} UE x {n} BS task, while keeping UEs connected.\n",
        w = target.area_width,
        h = target.area_height,
        n = target.num_bs,
        pos = positions.join(", "),
        m = target.num_ues,
        dt = target.step_duration,
        len = target.episode_len,
        f = target.carrier_freq_mhz,
        hb = target.bs_height_m,
        hm = target.ue_height_m,
        tx = target.tx_power_dbm,
        bw = target.bandwidth_hz,
        noise = target.noise_dbm_per_hz,
        interf = if target.interference {
            ", co-channel interference from the other base stations counted"
        } else {
            ", interference ignored"
        },
        smin = target.sinr_min,
        dmin = target.d_min_bps,
        dmax = target.d_max_bps,
        mm = spec.m_max,
        nn = spec.n_max,
        pairs = spec.pairs(),
    )
}

/// Describes the environment and task and asks for a full curriculum.
pub fn describe(target: &EnvConfig, spec: &EncodingSpec) -> PromptBundle {
    let user_text = format!(
        "{env}\n\
         Design a curriculum: an ordered list of stages that starts with easy tasks and ends \
         with the target task. Each stage sets a scaled environment, a reward expression, a pass \
         threshold and a step budget. One policy network is trained through all stages.\n\
         \n\
         {lang}\n\
         {rules}\n\
         Answer with exactly one JSON object of the form\n\
         {{\"stages\": [STAGE, ...]}}\n\
         where STAGE is\n\
         {schema}\n",
        env = environment_text(target, spec),
        lang = language_text(),
        rules = rules_text(target, spec),
        schema = STAGE_SCHEMA,
    );
    PromptBundle {
        system_text: SYSTEM_TEXT.to_string(),
        user_text,
        kind: PromptKind::GenerateCurriculum,
    }
}

fn fmt_rewards(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Reports progress on a stagnating stage and asks whether to keep the
/// curriculum or replace the stages from the current one onward.
pub fn review_prompt(
    history: &RewardHistory,
    curriculum: &Curriculum,
    stage: usize,
    target: &EnvConfig,
    spec: &EncodingSpec,
) -> PromptBundle {
    let current = &curriculum.stages[stage];
    let rewards = history.stage_rewards(stage);
    let segment = history.current().map_or(&[][..], |s| &s.episode_rewards[..]);
    let recent = &segment[segment.len().saturating_sub(REVIEW_EPISODES)..];
    let w = current.window.max(1);
    let window_mean = if segment.len() >= w {
        format!("{:.4}", segment[segment.len() - w..].iter().sum::<f64>() / w as f64)
    } else {
        "n/a".to_string()
    };
    let slope_span = &segment[segment.len().saturating_sub(2 * w)..];
    let mut summary = String::new();
    for s in &history.segments {
        let mean = if s.episode_rewards.is_empty() {
            "n/a".to_string()
        } else {
            format!(
                "{:.4}",
                s.episode_rewards.iter().sum::<f64>() / s.episode_rewards.len() as f64
            )
        };
        let _ = writeln!(
            summary,
            "- stage {} ({}): {} episodes, {} env steps, mean reward {}",
            s.stage_index,
            s.stage_name,
            s.episode_rewards.len(),
            s.env_steps,
            mean
        );
    }
    let user_text = format!(
        "{env}\n\
         Current curriculum (stage indices start at 0):\n{curr}\n\n\
         Training is at stage {stage} (\"{name}\") and has stopped improving.\n\
         Threshold {th}, window {w}. Episodes on this stage across all visits: {total}.\n\
         Current visit: {n} episodes, last-window mean {wm}, least-squares slope over the last \
         {span} episodes {slope:.6} per episode.\n\
         Per-episode mean rewards of the current visit (most recent {shown}):\n{recent}\n\n\
         Stage visits so far:\n{summary}\n\
         {lang}\n\
         {rules}\n\
         Answer with exactly one JSON object, either\n\
         {{\"action\": \"keep\"}}\n\
         to continue unchanged, or\n\
         {{\"action\": \"adjust\", \"stages\": [STAGE, ...]}}\n\
         where the stages replace stage {stage} and everything after it; stages before {stage} \
         stay as they are. STAGE is\n\
         {schema}\n",
        env = environment_text(target, spec),
        curr = curriculum.to_json(),
        name = current.name,
        th = current.threshold,
        total = rewards.len(),
        n = segment.len(),
        wm = window_mean,
        span = slope_span.len(),
        slope = least_squares_slope(slope_span),
        shown = recent.len(),
        recent = fmt_rewards(recent),
        lang = language_text(),
        rules = rules_text(target, spec),
        schema = STAGE_SCHEMA,
    );
    PromptBundle {
        system_text: SYSTEM_TEXT.to_string(),
        user_text,
        kind: PromptKind::ReviewProgress,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::scripted_curriculum;

    #[test]
    fn description_is_deterministic_and_complete() {
        let target = EnvConfig::default();
        let spec = EncodingSpec::default();
        let a = describe(&target, &spec);
        assert_eq!(a, describe(&target, &spec));
        assert_eq!(a.kind, PromptKind::GenerateCurriculum);
        for p in Primitive::ALL {
            assert!(a.user_text.contains(p.name()), "{}", p.name());
        }
        assert!(a.user_text.contains("1 <= num_ues <= 5"));
        assert!(a.user_text.contains("1 <= num_bs <= 3"));
        assert!(a.user_text.contains("5 user equipments"));
        assert!(a.user_text.contains("3 base stations"));
        assert!(a.user_text.contains("\"max_env_steps\""));
        assert!(!a.system_text.is_empty());
    }

    #[test]
    fn review_prompt_carries_history() {
        let target = EnvConfig::default();
        let spec = EncodingSpec::default();
        let c = scripted_curriculum(&target, &spec).unwrap();
        let mut h = RewardHistory::default();
        h.begin(0, "basic-connectivity");
        h.record(&[0.5, 0.25, 0.125], 75);
        let p = review_prompt(&h, &c, 0, &target, &spec);
        assert_eq!(p.kind, PromptKind::ReviewProgress);
        assert!(p.user_text.contains("[0.5000, 0.2500, 0.1250]"));
        assert!(p.user_text.contains("\"action\": \"adjust\""));
        assert!(p.user_text.contains("stage 0 (\"basic-connectivity\")"));
        assert_eq!(p, review_prompt(&h, &c, 0, &target, &spec));
    }
}
