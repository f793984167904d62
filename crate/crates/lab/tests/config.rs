use orlicz_lab::config::{config_hash, ExperimentConfig, FieldKind, Plan, StructureKind};
use orlicz_lab::LabError;

const HEAT: &str = r#"
seed = 4
checks = ["max-principle", "exact-error"]

[structure]
kind = "power"
p = 2.0
factor = 1.0

[domain]
lower = [0.0]
upper = [1.0]
t_final = 0.1
h = 0.0625

[boundary]
expr = "sin(pi*x)"
exact = "exp(-pi^2*t)*sin(pi*x)"
"#;

fn resolve(text: &str) -> Result<Plan, LabError> {
    let cfg = ExperimentConfig::parse(text)?;
    Plan::resolve(cfg, config_hash(text)?, None)
}

#[test]
fn parses_a_full_config() {
    let cfg = ExperimentConfig::parse(HEAT).unwrap();
    assert_eq!(cfg.seed, 4);
    assert_eq!(cfg.checks, ["max-principle", "exact-error"]);
    assert_eq!(cfg.structure.kind, StructureKind::Power);
    assert_eq!(cfg.field.kind, FieldKind::Model);
    let plan = Plan::resolve(cfg, "h".into(), Some(9)).unwrap();
    assert_eq!(plan.seed, 9);
    assert_eq!(plan.dim().unwrap(), 1);
    assert_eq!(plan.structure.eval(0.5), 0.5);
    assert_eq!(plan.boundary().unwrap().eval(&[0.5], 0.0), 1.0);
    assert!(plan.exact.is_some());
}

#[test]
fn parse_errors_report_line_and_column() {
    let text = "seed = 1\n[structure]\nkind = \"power\"\np = 2.0\nbogus = 3\n";
    match ExperimentConfig::parse(text).unwrap_err() {
        LabError::Parse {
            line,
            column,
            message,
        } => {
            assert_eq!((line, column), (5, 1));
            assert!(message.contains("bogus"));
        }
        other => panic!("{other:?}"),
    }
    match ExperimentConfig::parse("seed = \n").unwrap_err() {
        LabError::Parse { line, .. } => assert_eq!(line, 1),
        other => panic!("{other:?}"),
    }
    assert_eq!(
        ExperimentConfig::parse("seed = 1\n")
            .unwrap_err()
            .exit_code(),
        2
    );
}

#[test]
fn hash_ignores_layout_but_not_values() {
    let reordered = r#"
# same config, different layout
checks = [ "max-principle",   "exact-error" ]
seed = 4
[boundary]
exact = "exp(-pi^2*t)*sin(pi*x)"
expr = "sin(pi*x)"
[domain]
h = 0.0625
t_final = 0.1
upper = [1.0]
lower = [0.0]
[structure]
factor = 1.0
p = 2.0
kind = "power"
"#;
    let a = config_hash(HEAT).unwrap();
    assert_eq!(a.len(), 64);
    assert_eq!(a, config_hash(reordered).unwrap());
    assert_ne!(
        a,
        config_hash(&HEAT.replace("seed = 4", "seed = 5")).unwrap()
    );
}

#[test]
fn resolution_errors() {
    let e = resolve(&HEAT.replace("sin(pi*x)\"\nexact", "sin(pi*y)\"\nexact")).unwrap_err();
    assert!(
        matches!(e, LabError::Config(ref m) if m.contains("x2")),
        "{e}"
    );
    let e = resolve(&HEAT.replace("[domain]", "[field]\nkind = \"regularized\"\n\n[domain]"))
        .unwrap_err();
    assert!(e.to_string().contains("field.eps"));
    let e = resolve(&HEAT.replace("[domain]", "[field]\nnu = 0.5\n\n[domain]")).unwrap_err();
    assert!(e.to_string().contains("neither"));
    let e = resolve(&HEAT.replace("p = 2.0", "p = 0.5")).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let e = resolve(&HEAT.replace("kind = \"power\"", "kind = \"oscillating\"")).unwrap_err();
    assert!(e.to_string().contains("structure.g0"));
}

#[test]
fn table_boundary_interpolates() {
    let text = HEAT.replace(
        "expr = \"sin(pi*x)\"",
        "table = [[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]]",
    );
    let plan = resolve(&text).unwrap();
    let b = plan.boundary().unwrap();
    assert_eq!(b.eval(&[0.25], 0.3), 0.5);
    assert_eq!(b.eval(&[0.75], 0.0), 0.5);
    assert_eq!(b.eval(&[2.0], 0.0), 0.0);
    let both = HEAT.replace("exact =", "table = [[0.0, 0.0], [1.0, 1.0]]\nexact =");
    assert!(resolve(&both).is_err());
}

#[test]
fn fields_follow_the_config() {
    let plan = resolve(HEAT).unwrap();
    let f = plan.solve_field().unwrap();
    assert_eq!(f.epsilon(), None);
    let reg = resolve(&HEAT.replace(
        "[domain]",
        "[field]\nkind = \"regularized\"\neps = 0.25\n\n[domain]",
    ))
    .unwrap();
    assert_eq!(reg.solve_field().unwrap().epsilon(), Some(0.25));
    let cont = resolve(&HEAT.replace(
        "[domain]",
        "[field]\nkind = \"continuation\"\nj_max = 4\n\n[domain]",
    ))
    .unwrap();
    assert_eq!(cont.solve_field().unwrap().epsilon(), Some(0.0625));
    let fixed =
        resolve(&HEAT.replace("[domain]", "[field]\nnu = 0.5\nell = 2.0\n\n[domain]")).unwrap();
    let m = fixed.model_field(1).unwrap();
    use orlicz_core::field::VectorField;
    assert_eq!((m.nu(), m.ell()), (0.5, 2.0));
}
