//! The four example trainings, materialized with generated stimuli.
//!
//! ```text
//! <out>/<id>.training.json
//! <out>/tables/<id>/<loop>.csv
//! <out>/assets/<id>/...          (both workshop-2 days share assets/workshop-2)
//! ```

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::plan::{serialize_plan, Component, FlowItem, Loop, LoopOrder, Routine, Template, TrainingPlan};
use crate::stimulus::{
    gen_function, gen_spectrum, render_plot, sonify, synth_tone, write_wav, FunctionKind, StimulusError,
};
use crate::{AudioBuffer, DataSeries, SonificationSpec, SpectralLine, SplitMix64, ToneSpec};

pub const TRAINING_IDS: [&str; 4] = ["prototype", "workshop-1", "workshop-2-day-1", "workshop-2-day-2"];

const PLOT_W: u32 = 800;
const PLOT_H: u32 = 400;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
}

struct Out<'a> {
    root: &'a Path,
}

impl Out<'_> {
    fn create(&self, rel: &str) -> Result<(PathBuf, BufWriter<File>), BundleError> {
        let path = self.root.join(rel);
        let io_err = |source| BundleError::Io {
            path: path.clone(),
            source,
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let file = File::create(&path).map_err(io_err)?;
        Ok((path, BufWriter::new(file)))
    }

    fn bytes(&self, rel: &str, data: &[u8]) -> Result<PathBuf, BundleError> {
        let (path, mut w) = self.create(rel)?;
        w.write_all(data)
            .and_then(|_| w.flush())
            .map_err(|source| BundleError::Io {
                path: path.clone(),
                source,
            })?;
        Ok(path)
    }

    fn wav(&self, rel: &str, buffer: &AudioBuffer) -> Result<(), BundleError> {
        let (path, mut w) = self.create(rel)?;
        write_wav(buffer, &mut w)?;
        w.flush().map_err(|source| BundleError::Io { path, source })
    }

    fn svg(&self, rel: &str, series: &DataSeries) -> Result<(), BundleError> {
        self.bytes(rel, render_plot(series, PLOT_W, PLOT_H)?.as_bytes())?;
        Ok(())
    }

    fn table(&self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), BundleError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(header).expect("writing to memory");
        for row in rows {
            w.write_record(row).expect("writing to memory");
        }
        self.bytes(rel, &w.into_inner().expect("writing to memory"))?;
        Ok(())
    }

    fn plan(&self, plan: &TrainingPlan) -> Result<PathBuf, BundleError> {
        self.bytes(&format!("{}.training.json", plan.id), serialize_plan(plan).as_bytes())
    }
}

/// Writes all four trainings under `out` and returns the plan paths.
pub fn write_examples(out: &Path) -> Result<Vec<PathBuf>, BundleError> {
    let out = Out { root: out };
    let mut plans = vec![prototype(&out)?, workshop_1(&out)?];
    workshop_2_assets(&out)?;
    plans.push(workshop_2(&out, Day::One)?);
    plans.push(workshop_2(&out, Day::Two)?);
    Ok(plans)
}

fn tpl(s: &str) -> Template {
    Template::parse(s).expect("bundled templates are well formed")
}

fn text(content: &str, start_s: f64, stop_s: f64) -> Component {
    Component::Text {
        content: Template::literal(content),
        start_s,
        stop_s,
        narration: None,
    }
}

fn narrated(content: &str, start_s: f64, stop_s: f64, narration: &str) -> Component {
    Component::Text {
        content: Template::literal(content),
        start_s,
        stop_s,
        narration: Some(Template::literal(narration)),
    }
}

fn image(start_s: f64, stop_s: f64) -> Component {
    Component::Image {
        source: tpl("$image"),
        start_s,
        stop_s,
    }
}

fn audio() -> Component {
    Component::Audio {
        source: tpl("$sound"),
        start_s: 0.0,
    }
}

fn keys(allowed: &[&str], start_s: f64, window_s: f64) -> Component {
    Component::KeyResponse {
        allowed_keys: allowed.iter().map(|k| k.to_string()).collect(),
        correct_from: tpl("$corrAns"),
        window_s,
        start_s,
    }
}

fn feedback(correct: &str, incorrect: &str, duration_s: f64) -> Component {
    Component::Feedback {
        correct_message: correct.into(),
        incorrect_message: incorrect.into(),
        timeout_message: incorrect.into(),
        duration_s,
    }
}

fn routine(name: &str, duration_s: f64, components: Vec<Component>) -> Routine {
    Routine {
        name: name.into(),
        components,
        duration_s,
    }
}

fn step(name: &str) -> FlowItem {
    FlowItem::Routine { routine: name.into() }
}

fn sequential(name: &str, table: String, body: &str) -> FlowItem {
    FlowItem::Loop(Loop {
        name: name.into(),
        table,
        order: LoopOrder::Sequential,
        n_reps: 1,
        rows: None,
        body: vec![body.into()],
        seed: None,
    })
}

fn shuffled(name: &str, table: String, body: &str, seed: u64) -> FlowItem {
    FlowItem::Loop(Loop {
        order: LoopOrder::Random,
        seed: Some(seed),
        ..match sequential(name, table, body) {
            FlowItem::Loop(l) => l,
            FlowItem::Routine { .. } => unreachable!(),
        }
    })
}

/// Adds seeded uniform noise of the given amplitude to a series.
fn with_noise(series: DataSeries, amplitude: f64, seed: u64) -> Result<DataSeries, StimulusError> {
    let mut rng = SplitMix64::new(seed);
    let y = series.y().iter().map(|v| v + amplitude * rng.next_signed_unit()).collect();
    DataSeries::new(series.name.clone(), series.x().map(<[f64]>::to_vec), y)
}

fn line(center: f64, width: f64, amplitude: f64) -> SpectralLine {
    SpectralLine {
        center,
        width,
        amplitude,
    }
}

fn sonified(series: &DataSeries, f_max_hz: f64) -> Result<AudioBuffer, StimulusError> {
    let spec = SonificationSpec {
        f_max_hz,
        ..SonificationSpec::default()
    };
    sonify(series, &spec)
}

// Three modules of noisy tones, 4 s each, in the 260–280, 300–320 and
// 480–500 Hz ranges. The participant answers whether noise was mixed in.
fn prototype(out: &Out) -> Result<PathBuf, BundleError> {
    const ID: &str = "prototype";
    const MIXES: [f64; 3] = [0.0, 0.3, 0.6];
    let modules = [("modulo1", 260.0), ("modulo2", 300.0), ("modulo3", 480.0)];

    for (module, base) in modules {
        let mut rows = Vec::new();
        for (i, mix) in MIXES.into_iter().enumerate() {
            let freq = base + 10.0 * i as f64;
            let tone = synth_tone(&ToneSpec {
                noise_mix: mix,
                noise_seed: freq as u64,
                ..ToneSpec::new(freq, 4.0)
            })?;
            let stem = format!("{module}/tono_{freq:.0}hz");
            out.wav(&format!("assets/{ID}/{stem}.wav"), &tone)?;
            // The first 20 ms of the waveform as the visual stimulus.
            let shown = DataSeries::from_values(format!("{freq:.0} Hz"), tone.samples()[..882].to_vec())?;
            out.svg(&format!("assets/{ID}/{stem}.svg"), &shown)?;
            let answer = if mix > 0.0 { "s" } else { "n" };
            rows.push(vec![format!("{stem}.wav"), format!("{stem}.svg"), answer.to_string()]);
        }
        out.table(&format!("tables/{ID}/{module}.csv"), &["sound", "image", "corrAns"], &rows)?;
    }

    let intro = |name: &str, n: u32| {
        routine(
            name,
            4.0,
            vec![text(
                &format!("Comienza el módulo {n}. Se mostrarán una imagen y un sonido al mismo tiempo."),
                0.0,
                4.0,
            )],
        )
    };
    let module = |name: &str| {
        routine(
            name,
            7.9,
            vec![
                image(0.0, 4.0),
                audio(),
                text("¿Escuchaste ruido mezclado con el tono? s = sí, n = no", 4.0, 7.9),
                keys(&["s", "n"], 4.0, 3.9),
            ],
        )
    };
    let plan = TrainingPlan {
        id: ID.into(),
        title: "Entrenamiento prototipo".into(),
        description: "Tres módulos de tonos puros con y sin ruido blanco.".into(),
        locale: "es-AR".into(),
        routines: vec![
            intro("inicio", 1),
            module("modulo1"),
            intro("inicio2", 2),
            module("modulo2"),
            intro("inicio3", 3),
            module("modulo3"),
        ],
        flow: vec![
            step("inicio"),
            sequential("modulo1", format!("tables/{ID}/modulo1.csv"), "modulo1"),
            step("inicio2"),
            sequential("modulo2", format!("tables/{ID}/modulo2.csv"), "modulo2"),
            step("inicio3"),
            sequential("modulo3", format!("tables/{ID}/modulo3.csv"), "modulo3"),
        ],
        assets_dir: format!("assets/{ID}"),
    };
    out.plan(&plan)
}

// Block 1: four simple functions with arrow-key answers. Blocks 2 and 3:
// the same ten spectral cuts (four emission, six absorption), audio only
// and then audio with plots.
fn workshop_1(out: &Out) -> Result<PathBuf, BundleError> {
    const ID: &str = "workshop-1";
    const POINTS: usize = 40;

    let mut block1 = Vec::new();
    for (kind, key) in FunctionKind::ALL.into_iter().zip(["up", "down", "right", "left"]) {
        let series = gen_function(kind, POINTS, 2.0)?;
        let stem = format!("funciones/{}", kind.name());
        out.wav(&format!("assets/{ID}/{stem}.wav"), &sonified(&series, 1700.0)?)?;
        out.svg(&format!("assets/{ID}/{stem}.svg"), &series)?;
        block1.push(vec![format!("{stem}.wav"), format!("{stem}.svg"), key.to_string()]);
    }
    out.table(&format!("tables/{ID}/bloque1.csv"), &["sound", "image", "corrAns"], &block1)?;

    // (range start, range end, emission?) in wavelength units of the source spectrum.
    let ranges = [
        (7100.0, 7300.0, true),
        (7300.0, 7500.0, true),
        (5500.0, 5900.0, false),
        (6000.0, 6300.0, false),
        (6300.0, 6600.0, false),
    ];
    let mut cuts = Vec::new();
    for (i, (lo, hi, emission)) in ranges.into_iter().enumerate() {
        let center = lo + (hi - lo) * (0.4 + 0.05 * i as f64);
        let sign = if emission { 1.0 } else { -1.0 };
        let lines = [line(center, (hi - lo) / 14.0, sign * 0.8)];
        let fit = gen_spectrum(1.0, &lines, POINTS, (lo, hi))?;
        let flux = with_noise(fit.clone(), 0.08, 1000 + i as u64)?;
        let kind = if emission { "emision" } else { "absorcion" };
        let answer = if emission { "e" } else { "a" };
        for (variant, series) in [("flujo", flux), ("ajuste", fit)] {
            let stem = format!("espectro/{kind}_{lo:.0}_{hi:.0}_{variant}");
            out.wav(&format!("assets/{ID}/{stem}.wav"), &sonified(&series, 1700.0)?)?;
            out.svg(&format!("assets/{ID}/{stem}.svg"), &series)?;
            cuts.push((stem, answer));
        }
    }
    // Interleave emission and absorption cuts.
    let order = [4, 0, 6, 8, 3, 5, 1, 7, 2, 9];
    let block2: Vec<_> = order
        .iter()
        .map(|&i| vec![format!("{}.wav", cuts[i].0), cuts[i].1.to_string()])
        .collect();
    let block3: Vec<_> = order
        .iter()
        .map(|&i| vec![format!("{}.wav", cuts[i].0), format!("{}.svg", cuts[i].0), cuts[i].1.to_string()])
        .collect();
    out.table(&format!("tables/{ID}/bloque2.csv"), &["sound", "corrAns"], &block2)?;
    out.table(&format!("tables/{ID}/bloque3.csv"), &["sound", "image", "corrAns"], &block3)?;

    let functions_prompt = "Flecha arriba: senoidal. Flecha abajo: cuadrada. Flecha derecha: creciente. Flecha izquierda: decreciente.";
    let lines_prompt = "e: línea de emisión. a: línea de absorción.";
    let plan = TrainingPlan {
        id: ID.into(),
        title: "Primer workshop".into(),
        description: "Funciones simples y líneas espectrales de una galaxia, en tres bloques.".into(),
        locale: "es-AR".into(),
        routines: vec![
            routine(
                "inicio",
                10.0,
                vec![
                    text("Bloque 1: funciones simples", 0.0, 10.0),
                    text(
                        "Vas a ver y escuchar una función durante cuatro segundos. Después indicá con las flechas del teclado qué función era.",
                        0.0,
                        10.0,
                    ),
                ],
            ),
            routine(
                "bloque1",
                0.0,
                vec![
                    image(0.0, 4.0),
                    audio(),
                    text(functions_prompt, 4.0, 14.0),
                    keys(&["up", "down", "right", "left"], 4.0, 10.0),
                    feedback("Correcto", "Incorrecto", 1.5),
                ],
            ),
            routine(
                "inicio2",
                10.0,
                vec![
                    text("Bloque 2: líneas de emisión y absorción", 0.0, 10.0),
                    text(
                        "Ahora solo vas a escuchar. Indicá si el sonido corresponde a una línea de emisión (e) o de absorción (a).",
                        0.0,
                        10.0,
                    ),
                ],
            ),
            routine(
                "bloque2",
                0.0,
                vec![audio(), text(lines_prompt, 4.0, 14.0), keys(&["e", "a"], 4.0, 10.0)],
            ),
            routine(
                "inicio_3",
                10.0,
                vec![
                    text("Bloque 3: líneas de emisión y absorción", 0.0, 10.0),
                    text(
                        "Los mismos sonidos, ahora acompañados por su gráfico. Respondé con e o a.",
                        0.0,
                        10.0,
                    ),
                ],
            ),
            routine(
                "bloque3",
                0.0,
                vec![
                    image(0.0, 4.0),
                    audio(),
                    text(lines_prompt, 4.0, 14.0),
                    keys(&["e", "a"], 4.0, 10.0),
                    feedback("Correcto", "Incorrecto", 1.5),
                ],
            ),
            routine("fin", 5.0, vec![text("Fin del entrenamiento. ¡Gracias por participar!", 0.0, 5.0)]),
        ],
        flow: vec![
            step("inicio"),
            sequential("bloque1", format!("tables/{ID}/bloque1.csv"), "bloque1"),
            step("inicio2"),
            sequential("bloque2", format!("tables/{ID}/bloque2.csv"), "bloque2"),
            step("inicio_3"),
            sequential("bloque3", format!("tables/{ID}/bloque3.csv"), "bloque3"),
            step("fin"),
        ],
        assets_dir: format!("assets/{ID}"),
    };
    out.plan(&plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Day {
    One,
    Two,
}

const GLITCH_CLASSES: [(&str, &str); 3] = [("blip", "b"), ("koi_fish", "k"), ("scattered_light", "s")];
const PARTICLES: [(&str, &str); 5] = [
    ("converted_photon", "c"),
    ("electron", "e"),
    ("muon", "m"),
    ("photon", "p"),
    ("unknown", "u"),
];

fn glitch_series(class: &str, k: usize) -> Result<DataSeries, StimulusError> {
    let shift = 3.0 * k as f64;
    let lines: Vec<SpectralLine> = match class {
        "blip" => vec![line(14.0 + shift, 0.2, 1.0), line(27.0 - shift, 0.2, 0.7)],
        "koi_fish" => vec![line(17.0 + shift, 1.5, 1.0), line(19.0 + shift, 0.6, 0.6)],
        _ => (0..5).map(|j| line(4.0 + 7.5 * j as f64 + shift / 3.0, 2.2, 0.6)).collect(),
    };
    let clean = gen_spectrum(0.0, &lines, 380, (0.0, 38.0))?;
    with_noise(clean, 0.05, 7000 + 10 * k as u64 + class.len() as u64)
}

fn particle_series(class: &str, event: usize) -> Result<DataSeries, StimulusError> {
    let e = 0.4 * event as f64;
    let track = |c: f64| line(c + e, 0.25, 0.5);
    let deposit = line(6.8 - e, 0.4, 1.0);
    let lines = match class {
        "converted_photon" => vec![track(2.0), track(2.8), deposit],
        "electron" => vec![track(2.4), deposit],
        "muon" => (0..6).map(|j| line(0.8 + 1.2 * j as f64, 0.2, 0.7)).collect(),
        "photon" => vec![deposit],
        _ => vec![track(2.4)],
    };
    let clean = gen_spectrum(0.0, &lines, 80, (0.0, 8.0))?;
    with_noise(clean, 0.03, 8000 + 100 * event as u64 + class.len() as u64)
}

fn muon_series(present: bool, k: usize) -> Result<DataSeries, StimulusError> {
    let n = 60;
    let y: Vec<f64> = if present {
        // A rising or falling staircase across the detector layers.
        (0..n)
            .map(|i| {
                let level = (i / 10) as f64 / 5.0;
                if k.is_multiple_of(2) { level } else { 1.0 - level }
            })
            .collect()
    } else {
        vec![0.5; n]
    };
    let x = (0..n).map(|i| i as f64 * 0.1).collect();
    with_noise(DataSeries::new("muon", Some(x), y)?, 0.15, 9000 + k as u64 + u64::from(present))
}

/// Assets shared by both workshop-2 days.
fn workshop_2_assets(out: &Out) -> Result<(), BundleError> {
    let dir = "assets/workshop-2";
    for name in [
        "welcome",
        "glitch_intro",
        "glitch_prompt",
        "particle_intro",
        "particle_event2_intro",
        "particle_prompt",
        "muon_intro",
        "muon_prompt",
        "farewell",
    ] {
        // Stand-in narration: a short chime per text.
        let chime = synth_tone(&ToneSpec {
            amplitude: 0.5,
            ..ToneSpec::new(880.0, 0.6)
        })?;
        out.wav(&format!("{dir}/narration/{name}.wav"), &chime)?;
    }
    for (class, _) in GLITCH_CLASSES {
        for k in 0..2 {
            let series = glitch_series(class, k)?;
            let stem = format!("glitch/{class}_{}", k + 1);
            out.wav(&format!("{dir}/{stem}.wav"), &sonified(&series, 1600.0)?)?;
            out.svg(&format!("{dir}/{stem}.svg"), &series)?;
        }
    }
    for event in 1..=2 {
        for (class, _) in PARTICLES {
            let series = particle_series(class, event)?;
            let stem = format!("particles/event{event}/{class}");
            out.wav(&format!("{dir}/{stem}.wav"), &sonified(&series, 1700.0)?)?;
            out.svg(&format!("{dir}/{stem}.svg"), &series)?;
        }
    }
    for k in 0..6 {
        let present = k % 3 != 2;
        let series = muon_series(present, k)?;
        let stem = format!("muons/muon_{}", k + 1);
        out.wav(&format!("{dir}/{stem}.wav"), &sonified(&series, 1700.0)?)?;
        out.svg(&format!("{dir}/{stem}.svg"), &series)?;
    }
    Ok(())
}

fn rows(stems: impl IntoIterator<Item = (String, String)>) -> Vec<Vec<String>> {
    stems
        .into_iter()
        .map(|(stem, key)| vec![format!("{stem}.wav"), format!("{stem}.svg"), key])
        .collect()
}

// Glitch classification, particle detection and muon detection. Day two
// doubles the signals and splits particles into two events.
fn workshop_2(out: &Out, day: Day) -> Result<PathBuf, BundleError> {
    let (id, n_day) = match day {
        Day::One => ("workshop-2-day-1", 1),
        Day::Two => ("workshop-2-day-2", 2),
    };
    let header = ["sound", "image", "corrAns"];
    let table = |name: &str| format!("tables/{id}/{name}.csv");

    let glitch_reps = if day == Day::One { 1 } else { 2 };
    let glitches = (0..glitch_reps).flat_map(|k| {
        GLITCH_CLASSES
            .iter()
            .map(move |(class, key)| (format!("glitch/{class}_{}", k + 1), key.to_string()))
    });
    out.table(&table("glitch"), &header, &rows(glitches))?;

    let particles = |event: usize| {
        PARTICLES
            .iter()
            .map(move |(class, key)| (format!("particles/event{event}/{class}"), key.to_string()))
    };
    let n_muons = if day == Day::One { 3 } else { 6 };
    let muons = (0..n_muons).map(|k| (format!("muons/muon_{}", k + 1), if k % 3 != 2 { "y" } else { "n" }.to_string()));
    out.table(&table("muon"), &header, &rows(muons))?;

    let n = |name: &str| format!("narration/{name}.wav");
    let glitch_prompt = "b: blip. k: koi fish. s: scattered light.";
    let particle_prompt = "c: converted photon. e: electron. m: muon. p: photon. u: unknown.";
    let muon_prompt = "y: a muon crossed the detector. n: no muon.";
    let mut routines = vec![
        routine(
            "welcome",
            12.0,
            vec![narrated(
                &format!("Welcome to day {n_day} of the multisensory training. Every text is also read aloud."),
                0.0,
                12.0,
                &n("welcome"),
            )],
        ),
        routine(
            "glitch_intro",
            15.0,
            vec![narrated(
                &format!("Glitch classification. Listen and look at each glitch, then press {glitch_prompt}"),
                0.0,
                15.0,
                &n("glitch_intro"),
            )],
        ),
        routine(
            "glitch",
            0.0,
            vec![
                image(0.0, 38.0),
                audio(),
                narrated(glitch_prompt, 38.0, 48.0, &n("glitch_prompt")),
                keys(&["b", "k", "s"], 38.0, 10.0),
                feedback("Excellent job!!", "Oops!! This seems to belong to a different glich class", 2.0),
            ],
        ),
        routine(
            "particle_intro",
            15.0,
            vec![narrated(
                &format!("Particle detection. Each signal is one particle from a collider event. Press {particle_prompt}"),
                0.0,
                15.0,
                &n("particle_intro"),
            )],
        ),
        routine(
            "particle",
            0.0,
            vec![
                image(0.0, 8.0),
                audio(),
                narrated(particle_prompt, 8.0, 18.0, &n("particle_prompt")),
                keys(&["c", "e", "m", "p", "u"], 8.0, 10.0),
                feedback("Excellent job!!", "Oops!! This seems to be a different particle", 2.0),
            ],
        ),
        routine(
            "muon_intro",
            15.0,
            vec![narrated(
                &format!("Muon detection. Decide whether a muon crossed the detector. Press {muon_prompt}"),
                0.0,
                15.0,
                &n("muon_intro"),
            )],
        ),
        routine(
            "muon",
            0.0,
            vec![
                image(0.0, 6.0),
                audio(),
                narrated(muon_prompt, 6.0, 16.0, &n("muon_prompt")),
                keys(&["y", "n"], 6.0, 10.0),
                feedback("Buen trabajo!", "Osps!!", 2.0),
            ],
        ),
        routine(
            "farewell",
            8.0,
            vec![narrated("This is the end of the training. Thank you!", 0.0, 8.0, &n("farewell"))],
        ),
    ];

    let mut flow = vec![
        step("welcome"),
        step("glitch_intro"),
        shuffled("glitch", table("glitch"), "glitch", 101),
        step("particle_intro"),
    ];
    match day {
        Day::One => {
            out.table(&table("particles"), &header, &rows(particles(1)))?;
            flow.push(shuffled("particles", table("particles"), "particle", 202));
        }
        Day::Two => {
            out.table(&table("particles_event1"), &header, &rows(particles(1)))?;
            out.table(&table("particles_event2"), &header, &rows(particles(2)))?;
            routines.push(routine(
                "particle_event2_intro",
                8.0,
                vec![narrated(
                    "Second event: five more particles from a different collision.",
                    0.0,
                    8.0,
                    &n("particle_event2_intro"),
                )],
            ));
            flow.push(shuffled("particles_event1", table("particles_event1"), "particle", 202));
            flow.push(step("particle_event2_intro"));
            flow.push(shuffled("particles_event2", table("particles_event2"), "particle", 203));
        }
    }
    flow.extend([
        step("muon_intro"),
        shuffled("muon", table("muon"), "muon", 303),
        step("farewell"),
    ]);

    let plan = TrainingPlan {
        id: id.into(),
        title: format!("Second workshop, day {n_day}"),
        description: match day {
            Day::One => "Glitches, collider particles and cosmic muons: first contact.".into(),
            Day::Two => "Twice the signals, with two collider events.".into(),
        },
        locale: "en".into(),
        routines,
        flow,
        assets_dir: "assets/workshop-2".into(),
    };
    out.plan(&plan)
}
