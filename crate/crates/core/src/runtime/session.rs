use chrono::Duration;

use super::{
    AssetResolver, Directive, FeedbackKind, Outcome, RuntimeError, SessionConfig, SessionResult,
    TrialRecord,
};
use crate::plan::{
    check_with_tables, expand_trials, seconds_to_ms, Bindings, Component, FlowItem, Routine,
    Severity, TableSet, Template, TrainingPlan,
};

#[derive(Debug, Clone)]
enum Part {
    Text {
        content: String,
        narration: Option<String>,
        start: u64,
        stop: u64,
    },
    Image {
        asset: String,
        start: u64,
        stop: u64,
    },
    Audio {
        asset: String,
        start: u64,
    },
    Keys {
        allowed: Vec<String>,
        correct: String,
        start: u64,
        window_ms: u64,
        window_s: f64,
    },
    Feedback {
        correct: String,
        incorrect: String,
        timeout: String,
        duration: u64,
    },
}

impl Part {
    fn start(&self) -> Option<u64> {
        match self {
            Part::Text { start, .. }
            | Part::Image { start, .. }
            | Part::Audio { start, .. }
            | Part::Keys { start, .. } => Some(*start),
            Part::Feedback { .. } => None,
        }
    }

    fn stop(&self) -> Option<u64> {
        match self {
            Part::Text { stop, .. } | Part::Image { stop, .. } => Some(*stop),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
struct TrialContext {
    loop_name: String,
    rep_index: u32,
    row_index: usize,
}

/// One routine execution with every template already resolved.
#[derive(Debug, Clone)]
struct Step {
    routine: String,
    /// 0 for event-driven routines.
    duration: u64,
    parts: Vec<Part>,
    trial: Option<TrialContext>,
    image: String,
    audio: String,
}

impl Step {
    fn keys(&self) -> Option<usize> {
        self.parts.iter().position(|p| matches!(p, Part::Keys { .. }))
    }

    fn feedback(&self) -> Option<(&str, &str, &str, u64)> {
        self.parts.iter().find_map(|p| match p {
            Part::Feedback {
                correct,
                incorrect,
                timeout,
                duration,
            } => Some((correct.as_str(), incorrect.as_str(), timeout.as_str(), *duration)),
            _ => None,
        })
    }

    /// Latest offset at which a part without a response still acts.
    fn passive_length(&self) -> u64 {
        self.parts
            .iter()
            .filter_map(|p| p.stop().or_else(|| p.start()))
            .max()
            .unwrap_or(0)
    }
}

fn render(template: &Template, bindings: &Bindings, at: &str) -> Result<String, RuntimeError> {
    template.render(bindings).map_err(|e| {
        RuntimeError::InvalidPlan(vec![crate::plan::Finding {
            severity: Severity::Error,
            location: at.to_string(),
            message: e.to_string(),
        }])
    })
}

fn resolve_asset(
    template: &Template,
    bindings: &Bindings,
    at: &str,
    resolver: &dyn AssetResolver,
) -> Result<String, RuntimeError> {
    let path = render(template, bindings, at)?;
    if !crate::plan::is_safe_relative(&path) {
        return Err(RuntimeError::MissingAsset {
            path,
            reason: "not a safe relative path".into(),
        });
    }
    resolver
        .resolve(&path)
        .map_err(|reason| RuntimeError::MissingAsset { path, reason })
}

fn build_step(
    routine: &Routine,
    bindings: &Bindings,
    trial: Option<TrialContext>,
    resolver: &dyn AssetResolver,
) -> Result<Step, RuntimeError> {
    let at = format!("routine {}", routine.name);
    let mut parts = Vec::with_capacity(routine.components.len());
    let (mut image, mut audio) = (None, None);
    for component in &routine.components {
        parts.push(match component {
            Component::Text {
                content,
                start_s,
                stop_s,
                narration,
            } => Part::Text {
                content: render(content, bindings, &at)?,
                narration: narration
                    .as_ref()
                    .map(|n| resolve_asset(n, bindings, &at, resolver))
                    .transpose()?,
                start: seconds_to_ms(*start_s),
                stop: seconds_to_ms(*stop_s),
            },
            Component::Image {
                source,
                start_s,
                stop_s,
            } => {
                let asset = resolve_asset(source, bindings, &at, resolver)?;
                image.get_or_insert_with(|| asset.clone());
                Part::Image {
                    asset,
                    start: seconds_to_ms(*start_s),
                    stop: seconds_to_ms(*stop_s),
                }
            }
            Component::Audio { source, start_s } => {
                let asset = resolve_asset(source, bindings, &at, resolver)?;
                audio.get_or_insert_with(|| asset.clone());
                Part::Audio {
                    asset,
                    start: seconds_to_ms(*start_s),
                }
            }
            Component::KeyResponse {
                allowed_keys,
                correct_from,
                window_s,
                start_s,
            } => Part::Keys {
                allowed: allowed_keys.clone(),
                correct: render(correct_from, bindings, &at)?,
                start: seconds_to_ms(*start_s),
                window_ms: seconds_to_ms(*window_s),
                window_s: *window_s,
            },
            Component::Feedback {
                correct_message,
                incorrect_message,
                timeout_message,
                duration_s,
            } => Part::Feedback {
                correct: correct_message.clone(),
                incorrect: incorrect_message.clone(),
                timeout: timeout_message.clone(),
                duration: seconds_to_ms(*duration_s),
            },
        });
    }
    Ok(Step {
        routine: routine.name.clone(),
        duration: seconds_to_ms(routine.duration_s),
        parts,
        trial,
        image: image.unwrap_or_default(),
        audio: audio.unwrap_or_default(),
    })
}

fn build_steps(
    plan: &TrainingPlan,
    tables: &TableSet,
    resolver: &dyn AssetResolver,
) -> Result<Vec<Step>, RuntimeError> {
    let errors: Vec<_> = check_with_tables(plan, tables)
        .into_iter()
        .filter(|f| f.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(RuntimeError::InvalidPlan(errors));
    }
    let routine = |name: &str| plan.routine(name).expect("validated reference");
    let mut steps = Vec::new();
    for item in &plan.flow {
        match item {
            FlowItem::Routine { routine: name } => {
                steps.push(build_step(routine(name), &Bindings::new(), None, resolver)?);
            }
            FlowItem::Loop(l) => {
                let table = &tables[&l.name];
                for trial in expand_trials(l, table)? {
                    for name in &l.body {
                        let ctx = TrialContext {
                            loop_name: trial.loop_name.clone(),
                            rep_index: trial.rep_index,
                            row_index: trial.row_index,
                        };
                        steps.push(build_step(routine(name), &trial.bindings, Some(ctx), resolver)?);
                    }
                }
            }
        }
    }
    Ok(steps)
}

/// A trial the plan will record, in execution order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedTrial {
    pub loop_name: String,
    pub rep_index: u32,
    pub row_index: usize,
    pub routine_name: String,
    pub correct_answer: String,
    pub allowed_keys: Vec<String>,
    pub window_ms: u64,
}

/// Every record a complete session of `plan` produces, without touching
/// assets. Used to revalidate records that were produced elsewhere.
pub fn expected_trials(plan: &TrainingPlan, tables: &TableSet) -> Result<Vec<ExpectedTrial>, RuntimeError> {
    let steps = build_steps(plan, tables, &super::PrefixResolver::default())?;
    Ok(steps
        .into_iter()
        .filter_map(|step| {
            let keys = step.keys()?;
            let Part::Keys {
                allowed,
                correct,
                window_ms,
                ..
            } = &step.parts[keys]
            else {
                unreachable!()
            };
            let ctx = step.trial.clone();
            Some(ExpectedTrial {
                loop_name: ctx.as_ref().map(|c| c.loop_name.clone()).unwrap_or_default(),
                rep_index: ctx.as_ref().map_or(0, |c| c.rep_index),
                row_index: ctx.as_ref().map_or(0, |c| c.row_index),
                routine_name: step.routine.clone(),
                correct_answer: correct.clone(),
                allowed_keys: allowed.clone(),
                window_ms: *window_ms,
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Window {
    Closed,
    Open { opened_at: u64, expires_at: u64 },
    Resolved { at: u64 },
}

#[derive(Debug)]
struct Active {
    step: usize,
    t0: u64,
    started: Vec<bool>,
    visible: Vec<bool>,
    window: Window,
    feedback_until: Option<u64>,
    feedback_done_at: Option<u64>,
    in_feedback: bool,
    screen_dirty: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Expire,
    FeedbackEnd,
    Stop(usize),
    Start(usize),
    RoutineEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Ready,
    Running,
    Ended { at: u64 },
}

/// A running training.
#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    steps: Vec<Step>,
    phase: Phase,
    origin: u64,
    last_now: u64,
    active: Option<Active>,
    records: Vec<TrialRecord>,
}

impl Session {
    /// Resolves every routine execution of the plan up front; missing
    /// per-row assets therefore fail here rather than mid-session.
    pub fn start(
        plan: &TrainingPlan,
        tables: &TableSet,
        config: SessionConfig,
        resolver: &dyn AssetResolver,
    ) -> Result<Self, RuntimeError> {
        config.check()?;
        let steps = build_steps(plan, tables, resolver)?;
        Ok(Self {
            config,
            steps,
            phase: Phase::Ready,
            origin: 0,
            last_now: 0,
            active: None,
            records: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.phase, Phase::Ended { .. })
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    /// Trials with a key response that have not produced a record yet.
    pub fn pending_trials(&self) -> usize {
        let total = self.steps.iter().filter(|s| s.keys().is_some()).count();
        total - self.records.len()
    }

    /// Advances the clock to `now`, emitting everything that came due.
    /// The first call anchors the session start.
    pub fn tick(&mut self, now: u64) -> Result<Vec<Directive>, RuntimeError> {
        self.enter(now)?;
        let mut out = Vec::new();
        if self.phase == Phase::Ready {
            self.phase = Phase::Running;
            self.origin = now;
            self.begin_step(0, now, &mut out);
        }
        self.advance(now, true, &mut out);
        Ok(out)
    }

    /// Delivers a key press at `now`. Deadlines strictly before `now` are
    /// processed first, so a press exactly at window expiry still counts.
    pub fn key_event(&mut self, key: &str, now: u64) -> Result<Vec<Directive>, RuntimeError> {
        self.enter(now)?;
        let mut out = Vec::new();
        if self.phase != Phase::Running {
            return Ok(out);
        }
        self.advance(now, false, &mut out);
        self.accept_key(key, now, &mut out);
        self.advance(now, true, &mut out);
        Ok(out)
    }

    pub fn finish(self) -> Result<SessionResult, RuntimeError> {
        let Phase::Ended { at } = self.phase else {
            return Err(RuntimeError::SessionNotFinished);
        };
        let elapsed = Duration::milliseconds((at - self.origin) as i64);
        Ok(SessionResult {
            finished_at: self.config.started_at + elapsed,
            config: self.config,
            records: self.records,
        })
    }

    fn enter(&mut self, now: u64) -> Result<(), RuntimeError> {
        if self.is_finished() {
            return Err(RuntimeError::SessionFinished);
        }
        if now < self.last_now {
            return Err(RuntimeError::ClockWentBackwards {
                last: self.last_now,
                now,
            });
        }
        self.last_now = now;
        Ok(())
    }

    fn begin_step(&mut self, index: usize, at: u64, out: &mut Vec<Directive>) {
        if index >= self.steps.len() {
            self.active = None;
            self.phase = Phase::Ended { at };
            out.push(Directive::SessionEnd);
            return;
        }
        let n = self.steps[index].parts.len();
        self.active = Some(Active {
            step: index,
            t0: at,
            started: vec![false; n],
            visible: vec![false; n],
            window: Window::Closed,
            feedback_until: None,
            feedback_done_at: None,
            in_feedback: false,
            screen_dirty: false,
        });
    }

    fn next_event(&self, now: u64, expire_inclusive: bool) -> Option<(u64, Event)> {
        let active = self.active.as_ref()?;
        let step = &self.steps[active.step];
        let t0 = active.t0;
        let fixed_end = (step.duration > 0).then(|| t0 + step.duration);
        let mut candidates: Vec<(u64, Event)> = Vec::new();

        if let Window::Open { expires_at, .. } = active.window {
            let due = if expire_inclusive { expires_at <= now } else { expires_at < now };
            if due {
                candidates.push((expires_at, Event::Expire));
            }
        }
        if let Some(until) = active.feedback_until {
            candidates.push((until, Event::FeedbackEnd));
        }
        if !active.in_feedback {
            for (i, part) in step.parts.iter().enumerate() {
                if active.visible[i] {
                    if let Some(stop) = part.stop() {
                        candidates.push((t0 + stop, Event::Stop(i)));
                    }
                }
                if !active.started[i] {
                    if let Some(start) = part.start() {
                        let blocked = matches!(part, Part::Keys { .. }) && active.window != Window::Closed;
                        if !blocked {
                            candidates.push((t0 + start, Event::Start(i)));
                        }
                    }
                }
            }
        }
        if let Some(end) = self.routine_end(active, step, fixed_end) {
            candidates.push((end, Event::RoutineEnd));
        }
        candidates.into_iter().filter(|(t, _)| *t <= now).min()
    }

    fn routine_end(&self, active: &Active, step: &Step, fixed_end: Option<u64>) -> Option<u64> {
        if active.feedback_until.is_some() || matches!(active.window, Window::Open { .. }) {
            return None;
        }
        let after_feedback = active.feedback_done_at.unwrap_or(0);
        if let Some(end) = fixed_end {
            return Some(end.max(after_feedback));
        }
        if step.keys().is_some() {
            match active.window {
                Window::Resolved { at } => Some(at.max(after_feedback)),
                _ => None,
            }
        } else {
            Some(active.t0 + step.passive_length())
        }
    }

    fn advance(&mut self, now: u64, expire_inclusive: bool, out: &mut Vec<Directive>) {
        while let Some((at, event)) = self.next_event(now, expire_inclusive) {
            self.apply(at, event, out);
        }
    }

    fn apply(&mut self, at: u64, event: Event, out: &mut Vec<Directive>) {
        let active = self.active.as_mut().expect("events only exist while a routine runs");
        let step = &self.steps[active.step];
        match event {
            Event::Start(i) => {
                active.started[i] = true;
                match &step.parts[i] {
                    Part::Text {
                        content, narration, ..
                    } => {
                        active.visible[i] = true;
                        active.screen_dirty = true;
                        out.push(Directive::ShowText {
                            content: content.clone(),
                            narration: narration.clone(),
                        });
                    }
                    Part::Image { asset, .. } => {
                        active.visible[i] = true;
                        active.screen_dirty = true;
                        out.push(Directive::ShowImage {
                            asset: asset.clone(),
                        });
                    }
                    Part::Audio { asset, .. } => out.push(Directive::PlayAudio {
                        asset: asset.clone(),
                    }),
                    Part::Keys {
                        allowed,
                        window_ms,
                        window_s,
                        ..
                    } => {
                        let mut expires_at = at + window_ms;
                        if step.duration > 0 {
                            expires_at = expires_at.min(active.t0 + step.duration);
                        }
                        active.window = Window::Open {
                            opened_at: at,
                            expires_at,
                        };
                        out.push(Directive::AwaitKeys {
                            allowed_keys: allowed.clone(),
                            window_s: *window_s,
                        });
                    }
                    Part::Feedback { .. } => {}
                }
            }
            Event::Stop(i) => {
                active.visible[i] = false;
                out.push(Directive::ClearScreen);
                active.screen_dirty = false;
                for (j, part) in step.parts.iter().enumerate() {
                    if !active.visible[j] {
                        continue;
                    }
                    active.screen_dirty = true;
                    match part {
                        Part::Text { content, .. } => out.push(Directive::ShowText {
                            content: content.clone(),
                            narration: None,
                        }),
                        Part::Image { asset, .. } => out.push(Directive::ShowImage {
                            asset: asset.clone(),
                        }),
                        _ => {}
                    }
                }
            }
            Event::Expire => self.resolve(None, at, out),
            Event::FeedbackEnd => {
                active.feedback_until = None;
                active.feedback_done_at = Some(at);
                out.push(Directive::ClearScreen);
                active.screen_dirty = false;
            }
            Event::RoutineEnd => {
                if active.screen_dirty {
                    out.push(Directive::ClearScreen);
                }
                let next = active.step + 1;
                self.begin_step(next, at, out);
            }
        }
    }

    fn accept_key(&mut self, key: &str, now: u64, out: &mut Vec<Directive>) {
        let Some(active) = self.active.as_ref() else { return };
        if !matches!(active.window, Window::Open { .. }) {
            return;
        }
        let step = &self.steps[active.step];
        let Some(Part::Keys { allowed, .. }) = step.keys().map(|i| &step.parts[i]) else {
            return;
        };
        if allowed.iter().any(|k| k == key) {
            self.resolve(Some(key), now, out);
        }
    }

    /// Closes the open window with a key (or a timeout), records the trial
    /// and starts feedback when the routine has it.
    fn resolve(&mut self, key: Option<&str>, at: u64, out: &mut Vec<Directive>) {
        let active = self.active.as_mut().expect("resolve needs a running routine");
        let Window::Open { opened_at, .. } = active.window else {
            return;
        };
        active.window = Window::Resolved { at };
        let step = &self.steps[active.step];
        let Some(Part::Keys { correct, .. }) = step.keys().map(|i| &step.parts[i]) else {
            unreachable!("a window only opens for a key response")
        };
        let response = key.unwrap_or("").to_string();
        let outcome = Outcome::classify(&response, correct);
        let ctx = step.trial.clone();
        self.records.push(TrialRecord {
            loop_name: ctx.as_ref().map(|c| c.loop_name.clone()).unwrap_or_default(),
            rep_index: ctx.as_ref().map_or(0, |c| c.rep_index),
            row_index: ctx.as_ref().map_or(0, |c| c.row_index),
            routine_name: step.routine.clone(),
            stimulus_image: step.image.clone(),
            stimulus_audio: step.audio.clone(),
            correct_answer: correct.clone(),
            rt_ms: key.map(|_| at - opened_at),
            response,
            outcome,
        });
        if let Some((ok, wrong, timeout, duration)) = step.feedback() {
            let (message, kind) = match outcome {
                Outcome::Hit => (ok, FeedbackKind::Correct),
                Outcome::Miss => (wrong, FeedbackKind::Incorrect),
                Outcome::NoAnswer => (timeout, FeedbackKind::Timeout),
            };
            active.in_feedback = true;
            active.visible.iter_mut().for_each(|v| *v = false);
            active.feedback_until = Some(at + duration);
            out.push(Directive::ClearScreen);
            out.push(Directive::ShowFeedback {
                message: message.to_string(),
                kind,
            });
            active.screen_dirty = true;
        }
    }
}
