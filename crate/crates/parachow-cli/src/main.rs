//! Batch CLI: load a scene file, run a named formula or comparison, print
//! canonical exact output.
//!
//! Exit codes: 0 success (and exact agreement for `compare`), 1 exact
//! difference nonzero, 2 parse errors, 3 validation errors, 4 unknown
//! method/bundle/operator, 5 formula precondition violations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use parachow::class::GradedClass;
use parachow::error::{Error, ErrorKind, Result};
use parachow::formulas::{
    chern_classes, deligne_ch, graded_gysin_ch, gysin_ch, shifted_window_ch,
    single_divisor_closed_form, weighted_average_ch, GrPieceList, JumpData,
};
use parachow::parabolic::{split_to_filtration, split_to_table, ComponentTable, FiltrationData};
use parachow::residues::{
    image_filtration, kernel_filtration, monodromy_weight_filtration, NilpotentOperator,
};
use parachow::scene::{Bundle, Scene, FORMAT_VERSION};

#[derive(Parser)]
#[command(name = "parachow", version, about = "Exact parabolic Chern character calculator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Args)]
struct SceneArg {
    /// Path to the JSON scene file.
    #[arg(long)]
    scene: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Chern character of a bundle by a named method.
    Ch {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long)]
        bundle: String,
        #[arg(long)]
        method: String,
        /// Window shift for the `window` method, comma-joined integers.
        #[arg(long)]
        shift: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        output: OutputFormat,
    },
    /// Run two methods and report their exact difference (exit 0 iff zero).
    Compare {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long)]
        bundle: String,
        /// Two method names, comma-separated.
        #[arg(long)]
        methods: String,
        #[arg(long)]
        shift: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        output: OutputFormat,
    },
    /// Print the Chern classes c_1..c_dim of a bundle.
    Classes {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long)]
        bundle: String,
        /// Method used to compute the character first.
        #[arg(long, default_value = "average")]
        method: String,
        #[arg(long, value_enum, default_value = "text")]
        output: OutputFormat,
    },
    /// Print a filtration of a nilpotent operator (dimensions and bases).
    WeightFiltration {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long)]
        operator: String,
        #[arg(long, default_value = "monodromy")]
        kind: String,
    },
    /// Chern character of an exceptionally constant structure: evaluate the
    /// Gysin formula on the blow-up and push forward.
    BlowupCh {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long)]
        bundle: String,
        #[arg(long, value_enum, default_value = "text")]
        output: OutputFormat,
    },
    /// Load a scene and run every presentation/bundle invariant.
    Validate {
        #[command(flatten)]
        scene: SceneArg,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Method {
    Average,
    Window,
    Gysin,
    Graded,
    Closed,
    Integral,
    Deligne,
}

impl Method {
    fn parse(s: &str) -> Result<Method> {
        match s {
            "average" => Ok(Method::Average),
            "window" => Ok(Method::Window),
            "gysin" => Ok(Method::Gysin),
            "graded" => Ok(Method::Graded),
            "closed" => Ok(Method::Closed),
            "integral" => Ok(Method::Integral),
            "deligne" => Ok(Method::Deligne),
            other => Err(Error::not_found(format!(
                "method `{other}` (expected average, window, gysin, graded, closed, integral, deligne)"
            ))),
        }
    }
}

fn parse_shift(shift: &Option<String>, m: usize) -> Result<Vec<i64>> {
    match shift {
        None => Ok(vec![0; m]),
        Some(s) => {
            let parts = s
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::parse(format!("bad shift entry `{p}`")))
                })
                .collect::<Result<Vec<i64>>>()?;
            if parts.len() != m {
                return Err(Error::validation(format!(
                    "shift needs {m} entries, got {}",
                    parts.len()
                )));
            }
            Ok(parts)
        }
    }
}

fn table_of(scene: &Scene, bundle: &Bundle) -> Result<ComponentTable> {
    let ring = scene.effective_ring();
    match bundle {
        Bundle::Split { bundle, n } => split_to_table(bundle, ring, *n),
        Bundle::Table(t) => Ok(t.clone()),
        Bundle::Filtration { data, .. } => parachow::formulas::filtration_to_table(data),
        Bundle::Jumps(_) => Err(Error::not_found(
            "this method needs a component table; jump data only supports `integral`",
        )),
    }
}

fn filtration_of(scene: &Scene, bundle: &Bundle) -> Result<FiltrationData> {
    let ring = scene.effective_ring();
    match bundle {
        Bundle::Split { bundle, n } => split_to_filtration(bundle, ring, *n),
        Bundle::Filtration { data, .. } => Ok(data.clone()),
        Bundle::Table(_) | Bundle::Jumps(_) => Err(Error::not_found(
            "this method needs filtration data (a `filtration` or `split` bundle)",
        )),
    }
}

fn compute_ch(
    scene: &Scene,
    bundle: &Bundle,
    method: Method,
    shift: &Option<String>,
) -> Result<GradedClass> {
    let ring = scene.effective_ring();
    match method {
        Method::Average => weighted_average_ch(&table_of(scene, bundle)?),
        Method::Deligne => deligne_ch(&table_of(scene, bundle)?),
        Method::Window => {
            let t = table_of(scene, bundle)?;
            let b = parse_shift(shift, t.divisor_count())?;
            shifted_window_ch(&t, &b)
        }
        Method::Gysin => gysin_ch(&filtration_of(scene, bundle)?),
        Method::Graded => graded_gysin_ch(&filtration_of(scene, bundle)?),
        Method::Closed => {
            if ring.divisor_count() != 1 {
                return Err(Error::precondition(
                    "the closed form applies to single-divisor rings",
                ));
            }
            let f = filtration_of(scene, bundle)?;
            let gr = GrPieceList::from_filtration(&f)?;
            let d = GradedClass::divisor(ring, 0)?;
            single_divisor_closed_form(f.ch_e(), &gr, &d)
        }
        Method::Integral => match bundle {
            Bundle::Jumps(j) => j.integral_ch(),
            _ => JumpData::from_table(&table_of(scene, bundle)?)?.integral_ch(),
        },
    }
}

fn class_json(c: &GradedClass) -> serde_json::Value {
    let coeffs: Vec<Vec<String>> = c
        .coeffs()
        .iter()
        .map(|row| row.iter().map(|x| x.to_string()).collect())
        .collect();
    serde_json::json!({
        "format_version": FORMAT_VERSION,
        "ring": c.ring().name(),
        "class": coeffs,
    })
}

fn render_class(c: &GradedClass, output: OutputFormat) -> String {
    match output {
        OutputFormat::Text => c.render(),
        OutputFormat::Json => class_json(c).to_string(),
    }
}

/// Terms of a single-degree class without the `deg k:` prefix.
fn render_terms(c: &GradedClass) -> String {
    let r = c.render();
    match r.split_once(": ") {
        Some((_, terms)) => terms.to_string(),
        None => r,
    }
}

fn run(cli: Cli) -> Result<(String, bool)> {
    match cli.command {
        Command::Ch {
            scene,
            bundle,
            method,
            shift,
            output,
        } => {
            let scene = Scene::load(&scene.scene)?;
            let b = scene.bundle(&bundle)?;
            let m = Method::parse(&method)?;
            let ch = compute_ch(&scene, b, m, &shift)?;
            Ok((render_class(&ch, output), true))
        }
        Command::Compare {
            scene,
            bundle,
            methods,
            shift,
            output,
        } => {
            let scene = Scene::load(&scene.scene)?;
            let b = scene.bundle(&bundle)?;
            let names: Vec<&str> = methods.split(',').map(|s| s.trim()).collect();
            if names.len() != 2 {
                return Err(Error::validation(
                    "compare needs exactly two methods, e.g. --methods average,gysin",
                ));
            }
            let m1 = Method::parse(names[0])?;
            let m2 = Method::parse(names[1])?;
            let c1 = compute_ch(&scene, b, m1, &shift)?;
            let c2 = compute_ch(&scene, b, m2, &shift)?;
            let diff = c1.sub(&c2)?;
            let text = match output {
                OutputFormat::Text => format!(
                    "{}: {}\n{}: {}\ndifference: {}",
                    names[0],
                    c1.render(),
                    names[1],
                    c2.render(),
                    diff.render()
                ),
                OutputFormat::Json => serde_json::json!({
                    "format_version": FORMAT_VERSION,
                    names[0]: class_json(&c1),
                    names[1]: class_json(&c2),
                    "difference": class_json(&diff),
                    "equal": diff.is_zero(),
                })
                .to_string(),
            };
            Ok((text, diff.is_zero()))
        }
        Command::Classes {
            scene,
            bundle,
            method,
            output,
        } => {
            let scene = Scene::load(&scene.scene)?;
            let b = scene.bundle(&bundle)?;
            let m = Method::parse(&method)?;
            let ch = compute_ch(&scene, b, m, &None)?;
            let cs = chern_classes(&ch)?;
            let text = match output {
                OutputFormat::Text => cs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| format!("c{} = {}", k + 1, render_terms(c)))
                    .collect::<Vec<_>>()
                    .join("\n"),
                OutputFormat::Json => {
                    let mut map = serde_json::Map::new();
                    map.insert(
                        "format_version".into(),
                        serde_json::json!(FORMAT_VERSION),
                    );
                    for (k, c) in cs.iter().enumerate() {
                        map.insert(format!("c{}", k + 1), class_json(c));
                    }
                    serde_json::Value::Object(map).to_string()
                }
            };
            Ok((text, true))
        }
        Command::WeightFiltration {
            scene,
            operator,
            kind,
        } => {
            let scene = Scene::load(&scene.scene)?;
            let mat = scene.operator(&operator)?;
            let eta = NilpotentOperator::new(mat.clone())?;
            let (name, filt) = match kind.as_str() {
                "monodromy" => ("monodromy weight", monodromy_weight_filtration(&eta)?),
                "image" => ("image", image_filtration(&eta)),
                "kernel" => ("kernel", kernel_filtration(&eta)),
                other => {
                    return Err(Error::not_found(format!(
                        "filtration kind `{other}` (expected monodromy, image, kernel)"
                    )))
                }
            };
            let text = format!(
                "operator {operator}: size {}, nilpotency order {}\n{name} filtration\n{}",
                eta.size(),
                eta.order(),
                filt.render()
            );
            Ok((text, true))
        }
        Command::BlowupCh {
            scene,
            bundle,
            output,
        } => {
            let scene = Scene::load(&scene.scene)?;
            let bl = scene.blowup.as_ref().ok_or_else(|| {
                Error::precondition("blowup-ch needs a scene with a blowup stanza")
            })?;
            let b = scene.bundle(&bundle)?;
            let (data, ch_h) = match b {
                Bundle::Filtration { data, ch_h } => (data.clone(), ch_h.clone()),
                Bundle::Split { bundle, n } => (
                    split_to_filtration(bundle, scene.effective_ring(), *n)?,
                    None,
                ),
                _ => {
                    return Err(Error::not_found(
                        "blowup-ch needs a filtration or split bundle",
                    ))
                }
            };
            // Derive ch(H) by pushing down when the scene does not give it;
            // the consistency check pull(ch_h) = ch(E) runs either way.
            let ch_h = match ch_h {
                Some(c) => c,
                None => bl.pushforward(data.ch_e())?,
            };
            let down = bl.exceptionally_constant_ch(&ch_h, &data)?;
            Ok((render_class(&down, output), true))
        }
        Command::Validate { scene } => {
            let loaded = Scene::load(&scene.scene)?;
            // Split bundles validate fully through table construction.
            for (name, b) in &loaded.bundles {
                if let Bundle::Split { bundle, n } = b {
                    split_to_table(bundle, loaded.effective_ring(), *n).map_err(|e| {
                        Error::validation(format!("bundle `{name}`: {e}"))
                    })?;
                }
            }
            Ok((format!("scene OK: {}", loaded.summary()), true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((text, agree)) => {
            println!("{text}");
            if agree {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Parse => ExitCode::from(2),
                ErrorKind::Validation => ExitCode::from(3),
                ErrorKind::NotFound => ExitCode::from(4),
                ErrorKind::Precondition => ExitCode::from(5),
            }
        }
    }
}
