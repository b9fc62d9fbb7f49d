//! `rankcrypt`: keys, signatures, IBE artifacts and the attack pipelines
//! behind one deterministic command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::Rng as _;
use serde_json::{json, Value};

use rankcrypt::algebra::{ExtField, Matrix};
use rankcrypt::codec::{read_fq, read_vec, write_fq, write_vec, Document};
use rankcrypt::hamming::{break_hamming_ibe, prange_expected_iterations};
use rankcrypt::ibe::{
    decrypt_rank, encrypt_hamming, encrypt_rank, extract, setup_hamming, setup_rank, HammingCiphertext, MasterKeys, Mpk,
    RankCiphertext, UserKey,
};
use rankcrypt::lrpc::LrpcParams;
use rankcrypt::profiles::{derive_ranksign, Profile, Scheme, BUILTIN};
use rankcrypt::ranksign::{keygen, sign, verify, PublicKey, SecretKey, Signature};
use rankcrypt::ranksign_attack::{self, forged_sign, ForgeKey, Rank1Strategy};
use rankcrypt::rsl::{self, gen_instance, ibe_param_check_at_gv, RslInstance, RslSecret, RslStrategy};
use rankcrypt::{rng_from_seed, Error};

#[derive(Parser)]
#[command(name = "rankcrypt", version, about = "Rank-metric signatures, IBE, and their attacks at desk scale")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Seed for every random draw; required by randomized commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Built-in profile name or path to a profile file.
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Where to write the primary artifact (stdout if absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print a machine-readable report on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for enumeration-heavy steps.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Skip the profile validators and the read-only guard.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter validation and derivation.
    Params {
        #[command(subcommand)]
        action: ParamsCmd,
    },
    /// RankSign key generation.
    Keygen {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        sk: PathBuf,
    },
    /// RankSign signing.
    Sign {
        #[arg(long)]
        sk: PathBuf,
        #[command(flatten)]
        msg: MessageArg,
    },
    /// RankSign verification; exit 1 on an invalid signature.
    Verify {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        sig: PathBuf,
        #[command(flatten)]
        msg: MessageArg,
    },
    /// Sign with a recovered forge key.
    Forge {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        pk: PathBuf,
        #[command(flatten)]
        msg: MessageArg,
    },
    /// Key-recovery attacks.
    Attack {
        #[command(subcommand)]
        target: AttackCmd,
    },
    /// Rank Support Learning instances.
    Rsl {
        #[command(subcommand)]
        action: RslCmd,
    },
    /// Identity-based encryption.
    Ibe {
        #[command(subcommand)]
        action: IbeCmd,
    },
    /// Timed trials of the pipeline matching the profile, as CSV.
    Bench {
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
}

#[derive(Subcommand)]
enum ParamsCmd {
    /// Validator, counter and constraint report for a profile.
    Check,
    /// Completes a parameter set and prints it as a profile file.
    Derive {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        t: Option<usize>,
        /// q = 2^a.
        #[arg(long, default_value_t = 1)]
        a: u32,
    },
    /// Lists the built-in profiles.
    List,
}

#[derive(Subcommand)]
enum AttackCmd {
    /// Recovers a RankSign forge key from a public key.
    Ranksign {
        #[arg(long)]
        pk: PathBuf,
        /// enumerate, bilinear, or auto (enumerate at q = 2).
        #[arg(long, default_value = "auto")]
        strategy: String,
    },
    /// Decrypts a Hamming-mode IBE ciphertext from public data.
    HammingIbe {
        #[arg(long)]
        mpk: PathBuf,
        #[arg(long)]
        ct: PathBuf,
        /// Per-column Prange budget; default 50× the expectation.
        #[arg(long)]
        max_iters: Option<usize>,
    },
}

#[derive(Subcommand)]
enum RslCmd {
    /// Draws an instance; the secret goes to --secret.
    Gen {
        #[arg(long)]
        secret: Option<PathBuf>,
    },
    /// Recovers the support of an instance.
    Attack {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "exhaustive")]
        strategy: String,
        /// Compare against a planted secret.
        #[arg(long)]
        secret: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum IbeCmd {
    Setup {
        #[arg(long)]
        mpk: PathBuf,
        #[arg(long)]
        msk: Option<PathBuf>,
        /// Also require the constraint that defeats the RSL attack.
        #[arg(long)]
        enforce_attack: bool,
    },
    Extract {
        #[arg(long)]
        mpk: PathBuf,
        #[arg(long)]
        msk: PathBuf,
        #[arg(long)]
        id: String,
    },
    /// Encrypts --message, or a random message written to --message-out.
    Encrypt {
        #[arg(long)]
        mpk: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        message: Option<PathBuf>,
        #[arg(long)]
        message_out: Option<PathBuf>,
    },
    Decrypt {
        #[arg(long)]
        mpk: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        ct: PathBuf,
    },
}

#[derive(Args)]
struct MessageArg {
    /// Message given inline.
    #[arg(long, conflicts_with = "msg_file")]
    msg: Option<String>,
    #[arg(long)]
    msg_file: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Lib(Error),
    /// A well-formed negative result, such as an invalid signature.
    Rejected(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Rejected(_) => 1,
            Failure::Lib(e) => match e {
                Error::Param(_) | Error::Parse(_) | Error::Shape(_) => 2,
                Error::Retryable(_) | Error::Exhausted(_) | Error::Budget(_) | Error::Assumption(_) => 1,
                Error::Anomaly(_) | Error::ZeroInverse => 3,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(s) | Failure::Rejected(s) => s.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

struct Ctx {
    g: Global,
}

impl Ctx {
    fn seed(&self) -> Outcome<u64> {
        self.g.seed.ok_or_else(|| Failure::Usage("this command is randomized and needs --seed".into()))
    }

    fn profile(&self) -> Outcome<Profile> {
        let name = self.g.profile.as_deref().ok_or_else(|| Failure::Usage("--profile is required".into()))?;
        Ok(Profile::resolve(name)?)
    }

    /// The profile, after the read-only guard and validators unless forced.
    fn runnable_profile(&self) -> Outcome<Profile> {
        let p = self.profile()?;
        if !self.g.force {
            if p.read_only {
                return Err(Failure::Usage(format!("profile {} is for checks only (use --force to run it)", p.name)));
            }
            p.validate()?;
        }
        Ok(p)
    }

    fn threads(&self) -> usize {
        self.g.threads.max(1)
    }

    /// Writes the artifact to --out, or to stdout unless a JSON report
    /// takes its place there.
    fn emit(&self, artifact: &str) -> Outcome<()> {
        match &self.g.out {
            Some(path) => write_file(path, artifact),
            None if !self.g.json => {
                print!("{artifact}");
                Ok(())
            }
            None => Ok(()),
        }
    }

    fn report(&self, command: &str, mut body: Value, text: &str) {
        if self.g.json {
            body["schema"] = json!(1);
            body["command"] = json!(command);
            println!("{}", serde_json::to_string_pretty(&body).expect("report is serializable"));
        } else if !text.is_empty() {
            eprint!("{text}");
        }
    }
}

fn read_file(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Outcome<()> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn message_bytes(m: &MessageArg) -> Outcome<Vec<u8>> {
    match (&m.msg, &m.msg_file) {
        (Some(s), None) => Ok(s.as_bytes().to_vec()),
        (None, Some(p)) => fs::read(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display()))),
        _ => Err(Failure::Usage("give the message with --msg or --msg-file".into())),
    }
}

fn rank1_strategy(name: &str, pk: &PublicKey) -> Outcome<Rank1Strategy> {
    match name {
        "auto" if pk.params.a == 1 => Ok(Rank1Strategy::Enumerate),
        "auto" => Ok(Rank1Strategy::Bilinear),
        other => Ok(other.parse()?),
    }
}

fn params_check(ctx: &Ctx) -> Outcome<()> {
    let p = ctx.profile()?;
    let rep = p.check()?;
    if ctx.g.json {
        let lines: Vec<Value> =
            rep.lines.iter().map(|l| json!({"name": l.name, "value": l.value, "holds": l.holds})).collect();
        let params: serde_json::Map<String, Value> = rep.params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        ctx.report(
            "params check",
            json!({"profile": rep.profile, "scheme": rep.scheme, "params": params, "lines": lines, "ok": rep.ok()}),
            "",
        );
        if let Some(path) = &ctx.g.out {
            write_file(path, &rep.render())?;
        }
        Ok(())
    } else {
        ctx.emit(&rep.render())
    }
}

fn params_derive(ctx: &Ctx, n: Option<usize>, k: Option<usize>, m: Option<usize>, d: Option<usize>, t: Option<usize>, a: u32) -> Outcome<()> {
    let profile = match (n, k, m, d, t) {
        (Some(n), Some(k), Some(m), Some(d), Some(t)) => {
            let (w, t_prime) = derive_ranksign(n, k, m, d, t)?;
            Profile { name: "derived".into(), scheme: Scheme::RankSign(LrpcParams { n, k, m, d, t, t_prime, w, a }), read_only: false }
        }
        (None, None, None, None, None) => {
            let mut p = ctx.profile()?;
            p.scheme = match p.scheme {
                Scheme::RankSign(s) => {
                    let (w, t_prime) = derive_ranksign(s.n, s.k, s.m, s.d, s.t)?;
                    Scheme::RankSign(LrpcParams { w, t_prime, ..s })
                }
                Scheme::Ibe { params, .. } => Scheme::Ibe { params: ibe_param_check_at_gv(&params)?.0, w_sgn_at_gv: false },
                other => other,
            };
            p
        }
        _ => return Err(Failure::Usage("derive needs all of --n --k --m --d --t, or a --profile".into())),
    };
    let text = profile.to_text();
    ctx.report("params derive", json!({"profile": text}), "");
    ctx.emit(&text)
}

fn cmd_keygen(ctx: &Ctx, pk_path: &Path, sk_path: &Path) -> Outcome<()> {
    let profile = ctx.runnable_profile()?;
    let Scheme::RankSign(params) = profile.scheme else {
        return Err(Failure::Usage(format!("profile {} is not a RankSign profile", profile.name)));
    };
    let mut rng = rng_from_seed(ctx.seed()?);
    let (pk, sk) = keygen(&params, &mut rng)?;
    write_file(pk_path, &pk.to_text())?;
    write_file(sk_path, &sk.to_text())?;
    ctx.report("keygen", json!({"profile": profile.name, "pk": pk_path, "sk": sk_path}), "");
    Ok(())
}

fn cmd_sign(ctx: &Ctx, sk_path: &Path, msg: &MessageArg) -> Outcome<()> {
    let sk = SecretKey::from_text(&read_file(sk_path)?)?;
    let msg = message_bytes(msg)?;
    let mut rng = rng_from_seed(ctx.seed()?);
    let sig = sign(&sk, &msg, &mut rng)?;
    ctx.report("sign", json!({"nonce": sig.nonce}), "");
    ctx.emit(&sig.to_text(&sk.ext))
}

fn cmd_verify(ctx: &Ctx, pk_path: &Path, sig_path: &Path, msg: &MessageArg) -> Outcome<()> {
    let pk = PublicKey::from_text(&read_file(pk_path)?)?;
    let sig = Signature::from_text(&pk.ext, &read_file(sig_path)?)?;
    let ok = verify(&pk, &message_bytes(msg)?, &sig);
    ctx.report("verify", json!({"valid": ok}), "");
    if !ctx.g.json {
        println!("{}", if ok { "valid" } else { "invalid" });
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Rejected("signature does not verify".into()))
    }
}

fn cmd_forge(ctx: &Ctx, key: &Path, pk_path: &Path, msg: &MessageArg) -> Outcome<()> {
    let pk = PublicKey::from_text(&read_file(pk_path)?)?;
    let fk = ForgeKey::from_text(&read_file(key)?)?;
    let mut rng = rng_from_seed(ctx.seed()?);
    let msg = message_bytes(msg)?;
    let sig = forged_sign(&fk, &pk, &msg, &mut rng)?;
    let ok = verify(&pk, &msg, &sig);
    if !ok {
        return Err(Failure::Lib(Error::Anomaly("forged signature does not verify".into())));
    }
    ctx.report("forge", json!({"nonce": sig.nonce, "verifies": ok}), "");
    ctx.emit(&sig.to_text(&pk.ext))
}

fn cmd_attack_ranksign(ctx: &Ctx, pk_path: &Path, strategy: &str) -> Outcome<()> {
    let pk = PublicKey::from_text(&read_file(pk_path)?)?;
    let strategy = rank1_strategy(strategy, &pk)?;
    let mut rng = rng_from_seed(ctx.seed()?);
    let out = ranksign_attack::attack(&pk, strategy, &mut rng, ctx.threads())?;
    let m = &out.key.manifest;
    let text = format!(
        "forge key recovered after {} rank-1 word(s); dim C'_pub = {}, dim F = {}\n",
        out.attempts,
        m.cpub_prime_dim,
        out.f_recovered.dim()
    );
    ctx.report(
        "attack ranksign",
        json!({
            "attempts": out.attempts,
            "cpub_prime_dim": m.cpub_prime_dim,
            "extension_dim": m.extension_dim,
            "dim_d": m.dim_d,
            "dim_d_prime": m.dim_d_prime,
            "f_dim": out.f_recovered.dim(),
        }),
        &text,
    );
    ctx.emit(&out.key.to_text())
}

fn cmd_attack_hamming(ctx: &Ctx, mpk_path: &Path, ct_path: &Path, max_iters: Option<usize>) -> Outcome<()> {
    let Mpk::Hamming(mpk) = Mpk::from_text(&read_file(mpk_path)?)? else {
        return Err(Failure::Usage("attack hamming-ibe needs a Hamming-mode master public key".into()));
    };
    let ct = HammingCiphertext::from_text(&read_file(ct_path)?)?;
    let p = &mpk.params;
    let budget = max_iters
        .unwrap_or_else(|| (50.0 * prange_expected_iterations(p.n_sgn, p.k_sgn, p.w_dec)).ceil() as usize)
        .max(1);
    let mut rng = rng_from_seed(ctx.seed()?);
    let out = break_hamming_ibe(&mpk, &ct, &mut rng, budget, ctx.threads())?;
    let mut csv = String::from("column,iterations,success\n");
    for c in &out.columns {
        csv.push_str(&format!("{},{},{}\n", c.column, c.iterations, c.success));
    }
    let cols: Vec<Value> =
        out.columns.iter().map(|c| json!({"column": c.column, "iterations": c.iterations, "success": c.success})).collect();
    if let Some(path) = &ctx.g.out {
        write_file(path, &hamming_message_text(&out.msg))?;
    }
    if ctx.g.json {
        ctx.report("attack hamming-ibe", json!({"budget": budget, "columns": cols, "message": out.msg}), "");
    } else {
        print!("{csv}");
    }
    Ok(())
}

fn cmd_rsl_gen(ctx: &Ctx, secret: Option<&Path>) -> Outcome<()> {
    let profile = ctx.runnable_profile()?;
    let Scheme::Rsl(params) = profile.scheme else {
        return Err(Failure::Usage(format!("profile {} is not an RSL profile", profile.name)));
    };
    let mut rng = rng_from_seed(ctx.seed()?);
    let (inst, sec) = gen_instance(&params, &mut rng)?;
    if let Some(path) = secret {
        write_file(path, &sec.to_text(&inst))?;
    }
    ctx.report("rsl gen", json!({"regenerated": sec.regenerated, "theorem_bound": rsl::theorem_bound(&params)}), "");
    ctx.emit(&inst.to_text())
}

fn cmd_rsl_attack(ctx: &Ctx, instance: &Path, strategy: &str, secret: Option<&Path>) -> Outcome<()> {
    let inst = RslInstance::from_text(&read_file(instance)?)?;
    let strategy: RslStrategy = strategy.parse()?;
    let mut rng = rng_from_seed(ctx.seed()?);
    let out = rsl::attack(&inst, strategy, &mut rng, ctx.threads())?;
    let planted = match secret {
        Some(p) => Some(RslSecret::from_text(&read_file(p)?)?),
        None => None,
    };
    let exact = planted.as_ref().map(|s| &out.f == s.f());
    let sound = planted.as_ref().map(|s| out.f.is_subspace_of(s.f()));
    let text = format!("dim F = {} from {} low-rank word(s)\n", out.f.dim(), out.words);
    ctx.report(
        "rsl attack",
        json!({"f_dim": out.f.dim(), "words": out.words, "attempts": out.attempts, "exact": exact, "sound": sound}),
        &text,
    );
    let doc = Document::new("RSL", "support").field("dim", out.f.dim()).block(write_fq(&inst.ext, out.f.basis()));
    ctx.emit(&doc.render())?;
    if sound == Some(false) {
        return Err(Failure::Lib(Error::Anomaly("recovered support is not inside the planted F".into())));
    }
    Ok(())
}

fn load_master(mpk: &Path, msk: Option<&Path>) -> Outcome<MasterKeys> {
    let mpk = Mpk::from_text(&read_file(mpk)?)?;
    let msk = match msk {
        Some(p) => Some(SecretKey::from_text(&read_file(p)?)?),
        None => None,
    };
    Ok(MasterKeys { mpk, msk })
}

fn cmd_ibe_setup(ctx: &Ctx, mpk_path: &Path, msk_path: Option<&Path>, enforce_attack: bool) -> Outcome<()> {
    let profile = ctx.runnable_profile()?;
    let mut rng = rng_from_seed(ctx.seed()?);
    let mk = match profile.scheme {
        Scheme::RankIbe(p) => setup_rank(&p, enforce_attack, &mut rng)?,
        Scheme::Hamming(p) => setup_hamming(&p, &mut rng)?,
        _ => return Err(Failure::Usage(format!("profile {} is not an IBE profile", profile.name))),
    };
    write_file(mpk_path, &mk.mpk.to_text())?;
    match (msk_path, &mk.msk) {
        (Some(path), Some(sk)) => write_file(path, &sk.to_text())?,
        (Some(_), None) => return Err(Failure::Usage("Hamming mode has no master secret key".into())),
        (None, Some(_)) => return Err(Failure::Usage("rank mode needs --msk".into())),
        (None, None) => {}
    }
    ctx.report("ibe setup", json!({"metric": mk.mpk.metric().tag()}), "");
    Ok(())
}

fn rank_ext(mpk: &Mpk) -> Outcome<&ExtField> {
    match mpk {
        Mpk::Rank(k) => Ok(&k.ext),
        Mpk::Hamming(_) => Err(Failure::Usage("Hamming-mode keys have no user keys".into())),
    }
}

fn cmd_ibe_extract(ctx: &Ctx, mpk: &Path, msk: &Path, id: &str) -> Outcome<()> {
    let mk = load_master(mpk, Some(msk))?;
    let ext = rank_ext(&mk.mpk)?.clone();
    let mut rng = rng_from_seed(ctx.seed()?);
    let uk = extract(&mk, id.as_bytes(), &mut rng)?;
    ctx.report("ibe extract", json!({"id": id}), "");
    ctx.emit(&uk.to_text(&ext))
}

fn rank_message_text(ext: &ExtField, msg: &[rankcrypt::algebra::FqmElem]) -> String {
    Document::new("IBE", "message").field("metric", "rank").block(write_vec(ext, msg)).render()
}

fn hamming_message_text(msg: &[u32]) -> String {
    let b = ExtField::new(1, 1).expect("F_2 exists");
    let row = Matrix::from_rows(vec![msg.to_vec()], msg.len());
    Document::new("IBE", "message").field("metric", "hamming").block(write_fq(&b, &row)).render()
}

fn cmd_ibe_encrypt(ctx: &Ctx, mpk: &Path, id: &str, message: Option<&Path>, message_out: Option<&Path>) -> Outcome<()> {
    let mpk = Mpk::from_text(&read_file(mpk)?)?;
    let mut rng = rng_from_seed(ctx.seed()?);
    let given = match message {
        Some(p) => {
            let doc = Document::parse(&read_file(p)?)?;
            doc.expect("IBE", "message", 1)?;
            Some(doc)
        }
        None => None,
    };
    let (ct_text, msg_text) = match &mpk {
        Mpk::Rank(k) => {
            let msg = match &given {
                Some(doc) => read_vec(&k.ext, &doc.blocks[0])?,
                None => (0..k.params.k_dec).map(|_| k.ext.random(&mut rng)).collect(),
            };
            if msg.len() != k.params.k_dec {
                return Err(Failure::Lib(Error::Shape(format!("message needs {} symbols", k.params.k_dec))));
            }
            (encrypt_rank(k, id.as_bytes(), &msg, &mut rng)?.to_text(&k.ext), rank_message_text(&k.ext, &msg))
        }
        Mpk::Hamming(k) => {
            let msg = match &given {
                Some(doc) => read_fq(&ExtField::new(1, 1)?, &doc.blocks[0])?.row_vec(0),
                None => (0..k.params.k_dec).map(|_| rng.gen_range(0..2)).collect(),
            };
            if msg.len() != k.params.k_dec {
                return Err(Failure::Lib(Error::Shape(format!("message needs {} bits", k.params.k_dec))));
            }
            (encrypt_hamming(k, id.as_bytes(), &msg, &mut rng)?.to_text(), hamming_message_text(&msg))
        }
    };
    if let Some(path) = message_out {
        write_file(path, &msg_text)?;
    }
    ctx.report("ibe encrypt", json!({"id": id, "metric": mpk.metric().tag()}), "");
    ctx.emit(&ct_text)
}

fn cmd_ibe_decrypt(ctx: &Ctx, mpk: &Path, key: &Path, ct: &Path) -> Outcome<()> {
    let mpk = Mpk::from_text(&read_file(mpk)?)?;
    let Mpk::Rank(k) = &mpk else {
        return Err(Failure::Usage("Hamming mode has no user keys; see attack hamming-ibe".into()));
    };
    let uk = UserKey::from_text(&k.ext, &read_file(key)?)?;
    let ct = RankCiphertext::from_text(&k.ext, &read_file(ct)?)?;
    let msg = decrypt_rank(k, &uk, &ct)?;
    ctx.report("ibe decrypt", json!({"id": String::from_utf8_lossy(&ct.id)}), "");
    ctx.emit(&rank_message_text(&k.ext, &msg))
}

struct Trial {
    success: bool,
    retries: usize,
}

fn bench_trial(profile: &Profile, seed: u64, threads: usize) -> Outcome<Trial> {
    let mut rng = rng_from_seed(seed);
    let failed = |e: Error| match e {
        Error::Anomaly(_) | Error::ZeroInverse => Err(Failure::Lib(e)),
        _ => Ok(Trial { success: false, retries: 0 }),
    };
    match profile.scheme {
        Scheme::RankSign(p) => {
            let (pk, _) = keygen(&p, &mut rng)?;
            let strategy = if p.a == 1 { Rank1Strategy::Enumerate } else { Rank1Strategy::Bilinear };
            let out = match ranksign_attack::attack(&pk, strategy, &mut rng, threads) {
                Ok(o) => o,
                Err(e) => return failed(e),
            };
            let msg = b"bench message";
            match forged_sign(&out.key, &pk, msg, &mut rng) {
                Ok(sig) => Ok(Trial { success: verify(&pk, msg, &sig), retries: out.attempts - 1 }),
                Err(e) => failed(e),
            }
        }
        Scheme::Rsl(p) => {
            let (inst, sec) = gen_instance(&p, &mut rng)?;
            match rsl::attack(&inst, RslStrategy::Exhaustive, &mut rng, threads) {
                Ok(o) => Ok(Trial { success: &o.f == sec.f(), retries: o.attempts.saturating_sub(1) }),
                Err(e) => failed(e),
            }
        }
        Scheme::Hamming(p) => {
            let mk = setup_hamming(&p, &mut rng)?;
            let Mpk::Hamming(mpk) = &mk.mpk else { unreachable!("Hamming setup yields a Hamming key") };
            let msg: Vec<u32> = (0..p.k_dec).map(|_| rng.gen_range(0..2)).collect();
            let ct = encrypt_hamming(mpk, b"bench", &msg, &mut rng)?;
            let budget = (50.0 * prange_expected_iterations(p.n_sgn, p.k_sgn, p.w_dec)).ceil() as usize;
            match break_hamming_ibe(mpk, &ct, &mut rng, budget.max(1), threads) {
                Ok(o) => Ok(Trial { success: o.msg == msg, retries: 0 }),
                Err(e) => failed(e),
            }
        }
        Scheme::RankIbe(p) => {
            let mk = setup_rank(&p, false, &mut rng)?;
            let Mpk::Rank(mpk) = &mk.mpk else { unreachable!("rank setup yields a rank key") };
            let uk = match extract(&mk, b"bench", &mut rng) {
                Ok(u) => u,
                Err(e) => return failed(e),
            };
            let msg: Vec<_> = (0..p.k_dec).map(|_| mpk.ext.random(&mut rng)).collect();
            let ct = encrypt_rank(mpk, b"bench", &msg, &mut rng)?;
            match decrypt_rank(mpk, &uk, &ct) {
                Ok(m) => Ok(Trial { success: m == msg, retries: 0 }),
                Err(e) => failed(e),
            }
        }
        Scheme::Ibe { .. } => Err(Failure::Usage("constraint-only profiles have no pipeline to bench".into())),
    }
}

fn cmd_bench(ctx: &Ctx, trials: usize) -> Outcome<()> {
    let profile = ctx.runnable_profile()?;
    let pipeline = match profile.scheme {
        Scheme::RankSign(_) => "ranksign-attack",
        Scheme::Rsl(_) => "rsl-attack",
        Scheme::Hamming(_) => "hamming-ibe-break",
        Scheme::RankIbe(_) => "rank-ibe",
        Scheme::Ibe { .. } => "none",
    };
    let mut master = rng_from_seed(ctx.seed()?);
    let seeds: Vec<u64> = (0..trials).map(|_| master.gen()).collect();
    let mut csv = String::from("pipeline,trial,seconds,success,retries\n");
    let mut rows = Vec::new();
    let mut successes = 0;
    for (i, &s) in seeds.iter().enumerate() {
        let start = Instant::now();
        let t = bench_trial(&profile, s, ctx.threads())?;
        let secs = start.elapsed().as_secs_f64();
        successes += usize::from(t.success);
        csv.push_str(&format!("{pipeline},{i},{secs:.6},{},{}\n", t.success, t.retries));
        rows.push(json!({"trial": i, "seconds": secs, "success": t.success, "retries": t.retries}));
    }
    let rate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
    ctx.report("bench", json!({"pipeline": pipeline, "trials": rows, "success_rate": rate}), &format!("success rate {rate:.3}\n"));
    ctx.emit(&csv)
}

fn run(cli: Cli) -> Outcome<()> {
    let ctx = Ctx { g: cli.global };
    match &cli.command {
        Command::Params { action } => match action {
            ParamsCmd::Check => params_check(&ctx),
            ParamsCmd::Derive { n, k, m, d, t, a } => params_derive(&ctx, *n, *k, *m, *d, *t, *a),
            ParamsCmd::List => {
                let text: String = BUILTIN.iter().map(|n| format!("{n}\n")).collect();
                ctx.report("params list", json!({"profiles": BUILTIN}), "");
                ctx.emit(&text)
            }
        },
        Command::Keygen { pk, sk } => cmd_keygen(&ctx, pk, sk),
        Command::Sign { sk, msg } => cmd_sign(&ctx, sk, msg),
        Command::Verify { pk, sig, msg } => cmd_verify(&ctx, pk, sig, msg),
        Command::Forge { key, pk, msg } => cmd_forge(&ctx, key, pk, msg),
        Command::Attack { target } => match target {
            AttackCmd::Ranksign { pk, strategy } => cmd_attack_ranksign(&ctx, pk, strategy),
            AttackCmd::HammingIbe { mpk, ct, max_iters } => cmd_attack_hamming(&ctx, mpk, ct, *max_iters),
        },
        Command::Rsl { action } => match action {
            RslCmd::Gen { secret } => cmd_rsl_gen(&ctx, secret.as_deref()),
            RslCmd::Attack { instance, strategy, secret } => cmd_rsl_attack(&ctx, instance, strategy, secret.as_deref()),
        },
        Command::Ibe { action } => match action {
            IbeCmd::Setup { mpk, msk, enforce_attack } => cmd_ibe_setup(&ctx, mpk, msk.as_deref(), *enforce_attack),
            IbeCmd::Extract { mpk, msk, id } => cmd_ibe_extract(&ctx, mpk, msk, id),
            IbeCmd::Encrypt { mpk, id, message, message_out } => {
                cmd_ibe_encrypt(&ctx, mpk, id, message.as_deref(), message_out.as_deref())
            }
            IbeCmd::Decrypt { mpk, key, ct } => cmd_ibe_decrypt(&ctx, mpk, key, ct),
        },
        Command::Bench { trials } => cmd_bench(&ctx, *trials),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
