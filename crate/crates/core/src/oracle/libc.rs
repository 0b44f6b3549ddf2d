//! Simulated library functions.
//!
//! Streams carry no real I/O: `fopen` succeeds for any non-empty path and
//! reads see end of file. Output to `stdout` and `stderr` is appended to the
//! trace output.

use crate::frontend::ast::Expr;
use crate::frontend::SourceSpan;
use crate::sema::IntKind;

use super::interp::{Interp, Stop, Value, R};
use super::memory::{AllocKind, Fault, Pointer};
use super::RuntimeErrorKind;

const EOF: i128 = -1;
const ERANGE: i128 = 34;

struct Ctx<'i, 'a> {
    it: &'i mut Interp<'a>,
    args: &'i [Value],
    span: SourceSpan,
}

impl<'i, 'a> Ctx<'i, 'a> {
    fn fault(&self, f: Fault) -> Stop {
        self.it.fault(self.span, f)
    }

    fn err(&self, kind: RuntimeErrorKind, msg: impl Into<String>) -> Stop {
        self.it.error(self.span, kind, msg)
    }

    fn int(&self, i: usize) -> R<i128> {
        match self.args.get(i) {
            Some(Value::Int(v)) => Ok(*v),
            Some(Value::Ptr(p)) => Ok(p.encode() as i128),
            Some(Value::Float(x)) => Ok(*x as i128),
            _ => Err(Stop::Unsupported { message: "missing integer argument".into(), span: self.span }),
        }
    }

    fn float(&self, i: usize) -> R<f64> {
        match self.args.get(i) {
            Some(Value::Float(x)) => Ok(*x),
            Some(Value::Int(v)) => Ok(*v as f64),
            _ => Err(Stop::Unsupported { message: "missing floating argument".into(), span: self.span }),
        }
    }

    fn ptr(&self, i: usize) -> R<Pointer> {
        match self.args.get(i) {
            Some(Value::Ptr(p)) => Ok(*p),
            Some(Value::Int(v)) => Ok(Pointer::decode(*v as u64)),
            _ => Err(Stop::Unsupported { message: "missing pointer argument".into(), span: self.span }),
        }
    }

    fn cstr(&self, i: usize) -> R<Vec<u8>> {
        let p = self.ptr(i)?;
        self.it.mem.read_cstr(p).map_err(|f| self.fault(f))
    }

    fn read(&self, p: Pointer, n: usize) -> R<Vec<u8>> {
        self.it.mem.read(p, n).map_err(|f| self.fault(f))
    }

    fn write(&mut self, p: Pointer, bytes: &[u8]) -> R<()> {
        self.it.mem.write(p, bytes).map_err(|f| self.it.fault(self.span, f))
    }

    fn write_ptr(&mut self, at: Pointer, v: Pointer) -> R<()> {
        if at.is_null() {
            return Ok(());
        }
        self.write(at, &v.encode().to_le_bytes())
    }

    /// Validate a `FILE *` argument.
    fn stream(&self, i: usize) -> R<Pointer> {
        let p = self.ptr(i)?;
        match self.it.mem.get(p) {
            _ if p.is_null() => Err(self.err(RuntimeErrorKind::NullDeref, "null stream")),
            Some(a) if matches!(a.kind, AllocKind::Stream { .. }) && p.off == 0 => {
                if a.live {
                    Ok(p)
                } else {
                    Err(self.err(RuntimeErrorKind::UseAfterFree, "use of a closed stream"))
                }
            }
            _ => Err(self.err(RuntimeErrorKind::OobAccess, "argument is not a stream")),
        }
    }

    fn emit(&mut self, stream: Pointer, bytes: &[u8]) {
        if let Some(AllocKind::Stream { standard: true, .. }) = self.it.mem.get(stream).map(|a| &a.kind) {
            self.it.output.extend_from_slice(bytes);
        }
    }

    /// Next input byte of a stream, or `None` at end of file.
    fn getc(&mut self, stream: Pointer) -> Option<u8> {
        if let Some(AllocKind::Stream { input, pos, eof, .. }) = self.it.mem.get_mut(stream).map(|a| &mut a.kind) {
            if let Some(b) = input.get(*pos).copied() {
                *pos += 1;
                return Some(b);
            }
            *eof = true;
        }
        None
    }

    fn heap(&mut self, n: u64, zeroed: bool) -> Pointer {
        let stmt = self.it.current_stmt();
        self.it.mem.alloc(AllocKind::Heap { site: self.span, stmt }, n, zeroed)
    }

    fn free(&mut self, p: Pointer) -> R<()> {
        if p.is_null() {
            return Ok(());
        }
        let bad = |c: &Self, m: &str| Err(c.err(RuntimeErrorKind::BadFree, m.to_string()));
        match self.it.mem.get(p) {
            Some(a) if matches!(a.kind, AllocKind::Heap { .. }) => {
                if !a.live {
                    return bad(self, "double free");
                }
                if p.off != 0 {
                    return bad(self, "free of a pointer into the middle of a block");
                }
            }
            _ => return bad(self, "free of memory not obtained from malloc"),
        }
        self.it.mem.kill(p);
        Ok(())
    }
}

fn ctype(name: &str, c: u8) -> Option<i128> {
    let b = |v: bool| Some(v as i128);
    match name {
        "isalnum" => b(c.is_ascii_alphanumeric()),
        "isalpha" => b(c.is_ascii_alphabetic()),
        "isblank" => b(c == b' ' || c == b'\t'),
        "iscntrl" => b(c.is_ascii_control()),
        "isdigit" => b(c.is_ascii_digit()),
        "isgraph" => b(c.is_ascii_graphic()),
        "islower" => b(c.is_ascii_lowercase()),
        "isprint" => b(c.is_ascii_graphic() || c == b' '),
        "ispunct" => b(c.is_ascii_punctuation()),
        "isspace" => b(matches!(c, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)),
        "isupper" => b(c.is_ascii_uppercase()),
        "isxdigit" => b(c.is_ascii_hexdigit()),
        "tolower" => Some(c.to_ascii_lowercase() as i128),
        "toupper" => Some(c.to_ascii_uppercase() as i128),
        _ => None,
    }
}

/// Result of `name(args)`, or `None` if the function is not simulated.
pub(super) fn call<'a>(it: &mut Interp<'a>, name: &str, args: &[Value], call: &'a Expr) -> Option<R<Option<Value>>> {
    let mut c = Ctx { it, args, span: call.span };
    let r = match name {
        "isalnum" | "isalpha" | "isblank" | "iscntrl" | "isdigit" | "isgraph" | "islower" | "isprint" | "ispunct"
        | "isspace" | "isupper" | "isxdigit" | "tolower" | "toupper" => (|| {
            let v = c.int(0)?;
            if v == EOF {
                let keep = matches!(name, "tolower" | "toupper");
                return Ok(int(if keep { EOF } else { 0 }));
            }
            if !(0..=255).contains(&v) {
                return Err(c.err(
                    RuntimeErrorKind::LibraryDomain,
                    format!("{name}({v}): argument is neither EOF nor an unsigned char value"),
                ));
            }
            Ok(int(ctype(name, v as u8).expect("ctype name")))
        })(),
        "abs" | "labs" => (|| {
            let v = c.int(0)?;
            let k = if name == "abs" { IntKind::Int } else { IntKind::Long };
            if !k.fits(-v) {
                return Err(c.err(RuntimeErrorKind::SignedOverflow, format!("{name} of the most negative value")));
            }
            Ok(int(v.abs()))
        })(),
        "malloc" => (|| {
            let n = c.int(0)? as u64;
            Ok(ptr(c.heap(n, false)))
        })(),
        "calloc" => (|| {
            let n = (c.int(0)? as u64).saturating_mul(c.int(1)? as u64);
            Ok(ptr(c.heap(n, true)))
        })(),
        "realloc" => (|| {
            let old = c.ptr(0)?;
            let n = c.int(1)? as u64;
            let p = c.heap(n, false);
            if !old.is_null() {
                let keep = c.it.mem.remaining(old).min(n as usize);
                let (b, i) = c.it.mem.read_raw(old, keep).map_err(|f| c.fault(f))?;
                c.free(old)?;
                c.it.mem.write_raw(p, &b, &i).map_err(|f| c.fault(f))?;
            }
            Ok(ptr(p))
        })(),
        "free" => c.ptr(0).and_then(|p| c.free(p)).map(|()| None),
        "exit" => c.int(0).and_then(|v| Err(Stop::Exit(v as i32 as i64))),
        "abort" => Err(Stop::Exit(134)),
        "memset" => (|| {
            let (p, v, n) = (c.ptr(0)?, c.int(1)?, c.int(2)? as usize);
            c.write(p, &vec![v as u8; n])?;
            Ok(ptr(p))
        })(),
        "memcpy" | "memmove" => (|| {
            let (d, s, n) = (c.ptr(0)?, c.ptr(1)?, c.int(2)? as usize);
            let (b, i) = c.it.mem.read_raw(s, n).map_err(|f| c.fault(f))?;
            c.it.mem.write_raw(d, &b, &i).map_err(|f| c.fault(f))?;
            Ok(ptr(d))
        })(),
        "memcmp" => (|| {
            let n = c.int(2)? as usize;
            let a = c.read(c.ptr(0)?, n)?;
            let b = c.read(c.ptr(1)?, n)?;
            Ok(int(order(&a, &b)))
        })(),
        "memchr" => (|| {
            let (p, v, n) = (c.ptr(0)?, c.int(1)? as u8, c.int(2)? as usize);
            let b = c.read(p, n)?;
            Ok(ptr(b.iter().position(|x| *x == v).map_or(Pointer::NULL, |i| p.offset(i as i64))))
        })(),
        "strlen" => c.cstr(0).map(|s| int(s.len() as i128)),
        "strcmp" => (|| Ok(int(order(&c.cstr(0)?, &c.cstr(1)?))))(),
        "strncmp" => (|| {
            let n = c.int(2)? as usize;
            let a = c.cstr(0)?;
            let b = c.cstr(1)?;
            let cut = |s: &[u8]| s[..s.len().min(n)].to_vec();
            Ok(int(order(&cut(&a), &cut(&b))))
        })(),
        "strchr" | "strrchr" => (|| {
            let p = c.ptr(0)?;
            let mut s = c.cstr(0)?;
            s.push(0);
            let v = c.int(1)? as u8;
            let i = if name == "strchr" { s.iter().position(|x| *x == v) } else { s.iter().rposition(|x| *x == v) };
            Ok(ptr(i.map_or(Pointer::NULL, |i| p.offset(i as i64))))
        })(),
        "strstr" => (|| {
            let p = c.ptr(0)?;
            let h = c.cstr(0)?;
            let n = c.cstr(1)?;
            let i = if n.is_empty() { Some(0) } else { h.windows(n.len()).position(|w| w == n.as_slice()) };
            Ok(ptr(i.map_or(Pointer::NULL, |i| p.offset(i as i64))))
        })(),
        "strpbrk" => (|| {
            let p = c.ptr(0)?;
            let s = c.cstr(0)?;
            let set = c.cstr(1)?;
            let i = s.iter().position(|x| set.contains(x));
            Ok(ptr(i.map_or(Pointer::NULL, |i| p.offset(i as i64))))
        })(),
        "strcpy" | "strcat" => (|| {
            let d = c.ptr(0)?;
            let mut s = c.cstr(1)?;
            s.push(0);
            let at = if name == "strcat" { d.offset(c.cstr(0)?.len() as i64) } else { d };
            c.write(at, &s)?;
            Ok(ptr(d))
        })(),
        "strncpy" => (|| {
            let d = c.ptr(0)?;
            let n = c.int(2)? as usize;
            let s = c.cstr(1)?;
            let mut buf = vec![0u8; n];
            let k = s.len().min(n);
            buf[..k].copy_from_slice(&s[..k]);
            c.write(d, &buf)?;
            Ok(ptr(d))
        })(),
        "atoi" => (|| {
            let s = c.cstr(0)?;
            let (v, _, _) = parse_int(&s, 10);
            Ok(int(IntKind::Int.wrap(v.unwrap_or(0))))
        })(),
        "strtol" | "strtoll" | "strtoul" | "strtoull" => (|| {
            let p = c.ptr(0)?;
            let s = c.cstr(0)?;
            let base = c.int(2)? as u32;
            let (v, used, neg) = parse_int(&s, base);
            let k = match name {
                "strtol" | "strtoll" => IntKind::Long,
                _ => IntKind::ULong,
            };
            let end = if used == 0 { p } else { p.offset(used as i64) };
            c.write_ptr(c.ptr(1)?, end)?;
            let v = match v {
                Some(v) if k.is_signed() && k.fits(v) => v,
                Some(v) if !k.is_signed() && k.fits(v.abs()) => k.wrap(if neg { -v.abs() } else { v }),
                Some(_) | None if used > 0 => {
                    c.it.write_errno(ERANGE);
                    match (k.is_signed(), neg) {
                        (true, true) => i64::MIN as i128,
                        (true, false) => i64::MAX as i128,
                        (false, _) => u64::MAX as i128,
                    }
                }
                _ => 0,
            };
            Ok(int(v))
        })(),
        "strtod" | "strtof" | "strtold" => (|| {
            let p = c.ptr(0)?;
            let s = c.cstr(0)?;
            let (v, used) = parse_float(&s);
            c.write_ptr(c.ptr(1)?, p.offset(used as i64))?;
            let limit = if name == "strtof" { f32::MAX as f64 } else { f64::MAX };
            if v.is_infinite() || v.abs() > limit {
                c.it.write_errno(ERANGE);
            }
            Ok(Some(Value::Float(if name == "strtof" { v as f32 as f64 } else { v })))
        })(),
        "fopen" => (|| {
            let path = c.cstr(0)?;
            c.cstr(1)?;
            if path.is_empty() {
                return Ok(ptr(Pointer::NULL));
            }
            let n = String::from_utf8_lossy(&path).into_owned();
            Ok(ptr(c.it.new_stream(&n, Some(c.span), false)))
        })(),
        "tmpfile" => Ok(ptr(c.it.new_stream("tmpfile", Some(c.span), false))),
        "fclose" => (|| {
            let p = c.ptr(0)?;
            if matches!(c.it.mem.get(p), Some(a) if !a.live && matches!(a.kind, AllocKind::Stream { .. })) {
                return Err(c.err(RuntimeErrorKind::BadFree, "fclose of a closed stream"));
            }
            let s = c.stream(0)?;
            c.it.mem.kill(s);
            Ok(int(0))
        })(),
        "fflush" => (|| {
            if !c.ptr(0)?.is_null() {
                c.stream(0)?;
            }
            Ok(int(0))
        })(),
        "feof" => (|| {
            let s = c.stream(0)?;
            let eof = matches!(c.it.mem.get(s).map(|a| &a.kind), Some(AllocKind::Stream { eof: true, .. }));
            Ok(int(eof as i128))
        })(),
        "ferror" => c.stream(0).map(|_| int(0)),
        "fgetc" | "getc" | "getchar" => (|| {
            let s = if name == "getchar" { c.it.stdin } else { c.stream(0)? };
            Ok(int(c.getc(s).map_or(EOF, |b| b as i128)))
        })(),
        "ungetc" => (|| {
            let v = c.int(0)?;
            let s = c.stream(1)?;
            if v == EOF {
                return Ok(int(EOF));
            }
            if let Some(AllocKind::Stream { input, pos, eof, .. }) = c.it.mem.get_mut(s).map(|a| &mut a.kind) {
                input.insert(*pos, v as u8);
                *eof = false;
            }
            Ok(int(v as u8 as i128))
        })(),
        "fgets" => (|| {
            let d = c.ptr(0)?;
            let n = c.int(1)?;
            let s = c.stream(2)?;
            let mut line = Vec::new();
            while (line.len() as i128) < n - 1 {
                match c.getc(s) {
                    Some(b) => {
                        line.push(b);
                        if b == b'\n' {
                            break;
                        }
                    }
                    None => break,
                }
            }
            if line.is_empty() {
                return Ok(ptr(Pointer::NULL));
            }
            line.push(0);
            c.write(d, &line)?;
            Ok(ptr(d))
        })(),
        "fread" => (|| {
            c.ptr(0)?;
            c.stream(3)?;
            Ok(int(0))
        })(),
        "fwrite" => (|| {
            let n = (c.int(1)? as usize).saturating_mul(c.int(2)? as usize);
            let b = c.read(c.ptr(0)?, n)?;
            let s = c.stream(3)?;
            c.emit(s, &b);
            Ok(int(c.int(2)?))
        })(),
        "fputc" | "putc" | "putchar" => (|| {
            let v = c.int(0)?;
            let s = if name == "putchar" { c.it.stdout } else { c.stream(1)? };
            c.emit(s, &[v as u8]);
            Ok(int(v as u8 as i128))
        })(),
        "fputs" | "puts" => (|| {
            let mut b = c.cstr(0)?;
            let s = if name == "puts" {
                b.push(b'\n');
                c.it.stdout
            } else {
                c.stream(1)?
            };
            c.emit(s, &b);
            Ok(int(1))
        })(),
        "printf" | "fprintf" | "sprintf" | "snprintf" => (|| {
            let fi = match name {
                "printf" => 0,
                "fprintf" | "sprintf" => 1,
                _ => 2,
            };
            let fmt = c.cstr(fi)?;
            let out = format(&c, &fmt, fi + 1)?;
            match name {
                "printf" => {
                    let s = c.it.stdout;
                    c.emit(s, &out);
                }
                "fprintf" => {
                    let s = c.stream(0)?;
                    c.emit(s, &out);
                }
                "sprintf" => {
                    let mut b = out.clone();
                    b.push(0);
                    c.write(c.ptr(0)?, &b)?;
                }
                _ => {
                    let n = c.int(1)? as usize;
                    if n > 0 {
                        let mut b = out[..out.len().min(n - 1)].to_vec();
                        b.push(0);
                        c.write(c.ptr(0)?, &b)?;
                    }
                }
            }
            Ok(int(out.len() as i128))
        })(),
        "remove" => c.cstr(0).map(|_| int(0)),
        "time" => (|| {
            let p = c.ptr(0)?;
            if !p.is_null() {
                c.write(p, &0i64.to_le_bytes())?;
            }
            Ok(int(0))
        })(),
        "strerror" | "setlocale" => {
            let text: &[u8] = if name == "strerror" { b"error" } else { b"C" };
            Ok(ptr(static_string(c.it, text)))
        }
        _ => return None,
    };
    Some(r)
}

fn int(v: i128) -> Option<Value> {
    Some(Value::Int(v))
}

fn ptr(p: Pointer) -> Option<Value> {
    Some(Value::Ptr(p))
}

fn order(a: &[u8], b: &[u8]) -> i128 {
    match a.cmp(b) {
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => 1,
    }
}

fn static_string(it: &mut Interp<'_>, text: &[u8]) -> Pointer {
    let p = it.mem.alloc(AllocKind::StrLit, text.len() as u64 + 1, true);
    let a = it.mem.get_mut(p).expect("fresh");
    a.bytes[..text.len()].copy_from_slice(text);
    p
}

/// strtol-style parse: value (None on overflow of i128), bytes consumed,
/// and whether a minus sign was seen.
fn parse_int(s: &[u8], base: u32) -> (Option<i128>, usize, bool) {
    let mut i = 0;
    while i < s.len() && s[i].is_ascii_whitespace() {
        i += 1;
    }
    let mut neg = false;
    if i < s.len() && (s[i] == b'+' || s[i] == b'-') {
        neg = s[i] == b'-';
        i += 1;
    }
    let mut base = base;
    let hex_prefix = i + 1 < s.len() && s[i] == b'0' && (s[i + 1] | 0x20) == b'x';
    if (base == 0 || base == 16) && hex_prefix && s.get(i + 2).is_some_and(|c| c.is_ascii_hexdigit()) {
        base = 16;
        i += 2;
    } else if base == 0 {
        base = if s.get(i) == Some(&b'0') { 8 } else { 10 };
    }
    if !(2..=36).contains(&base) {
        return (None, 0, neg);
    }
    let start = i;
    let mut v: Option<i128> = Some(0);
    while let Some(d) = s.get(i).and_then(|c| (*c as char).to_digit(base)) {
        v = v.and_then(|v| v.checked_mul(base as i128)).and_then(|v| v.checked_add(d as i128));
        if v.is_some_and(|v| v > u64::MAX as i128 * 2) {
            v = None;
        }
        i += 1;
    }
    if i == start {
        return (Some(0), 0, neg);
    }
    (v.map(|v| if neg { -v } else { v }), i, neg)
}

fn parse_float(s: &[u8]) -> (f64, usize) {
    let mut i = 0;
    while i < s.len() && s[i].is_ascii_whitespace() {
        i += 1;
    }
    let start = i;
    if i < s.len() && (s[i] == b'+' || s[i] == b'-') {
        i += 1;
    }
    let digits = |i: &mut usize| {
        let b = *i;
        while *i < s.len() && s[*i].is_ascii_digit() {
            *i += 1;
        }
        *i - b
    };
    let mut n = digits(&mut i);
    if i < s.len() && s[i] == b'.' {
        i += 1;
        n += digits(&mut i);
    }
    if n == 0 {
        return (0.0, 0);
    }
    if i < s.len() && (s[i] | 0x20) == b'e' {
        let mut j = i + 1;
        if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
            j += 1;
        }
        if digits(&mut j) > 0 {
            i = j;
        }
    }
    let text = std::str::from_utf8(&s[start..i]).unwrap_or("0");
    (text.parse().unwrap_or(0.0), i)
}

/// printf-style formatting of the arguments from index `first`.
fn format(c: &Ctx<'_, '_>, fmt: &[u8], first: usize) -> R<Vec<u8>> {
    let mut out = Vec::new();
    let mut arg = first;
    let mut i = 0;
    while i < fmt.len() {
        if fmt[i] != b'%' {
            out.push(fmt[i]);
            i += 1;
            continue;
        }
        i += 1;
        let mut left = false;
        let mut zero = false;
        let mut plus = false;
        while i < fmt.len() && matches!(fmt[i], b'-' | b'0' | b'+' | b' ' | b'#') {
            left |= fmt[i] == b'-';
            zero |= fmt[i] == b'0';
            plus |= fmt[i] == b'+';
            i += 1;
        }
        let mut width = 0usize;
        if fmt.get(i) == Some(&b'*') {
            width = c.int(arg)?.max(0) as usize;
            arg += 1;
            i += 1;
        }
        while i < fmt.len() && fmt[i].is_ascii_digit() {
            width = width * 10 + (fmt[i] - b'0') as usize;
            i += 1;
        }
        let mut prec: Option<usize> = None;
        if fmt.get(i) == Some(&b'.') {
            i += 1;
            let mut p = 0usize;
            if fmt.get(i) == Some(&b'*') {
                p = c.int(arg)?.max(0) as usize;
                arg += 1;
                i += 1;
            }
            while i < fmt.len() && fmt[i].is_ascii_digit() {
                p = p * 10 + (fmt[i] - b'0') as usize;
                i += 1;
            }
            prec = Some(p);
        }
        let mut long = 0;
        let mut short = 0;
        while i < fmt.len() && matches!(fmt[i], b'l' | b'h' | b'z' | b'L' | b'j' | b't') {
            match fmt[i] {
                b'h' => short += 1,
                _ => long += 1,
            }
            i += 1;
        }
        let Some(&conv) = fmt.get(i) else { break };
        i += 1;
        let (kind_s, kind_u) = match (long, short) {
            (0, 1) => (IntKind::Short, IntKind::UShort),
            (0, 2) => (IntKind::SChar, IntKind::UChar),
            (0, _) => (IntKind::Int, IntKind::UInt),
            _ => (IntKind::Long, IntKind::ULong),
        };
        let body: Vec<u8> = match conv {
            b'%' => b"%".to_vec(),
            b'd' | b'i' => {
                let v = kind_s.wrap(c.int(arg)?);
                arg += 1;
                let s = if plus && v >= 0 { format!("+{v}") } else { v.to_string() };
                s.into_bytes()
            }
            b'u' | b'x' | b'X' | b'o' => {
                let v = kind_u.wrap(c.int(arg)?);
                arg += 1;
                match conv {
                    b'u' => v.to_string(),
                    b'x' => format!("{v:x}"),
                    b'X' => format!("{v:X}"),
                    _ => format!("{v:o}"),
                }
                .into_bytes()
            }
            b'c' => {
                let v = c.int(arg)?;
                arg += 1;
                vec![v as u8]
            }
            b's' => {
                let mut s = c.cstr(arg)?;
                arg += 1;
                if let Some(p) = prec {
                    s.truncate(p);
                }
                s
            }
            b'p' => {
                let p = c.ptr(arg)?;
                arg += 1;
                format!("0x{:x}", p.encode()).into_bytes()
            }
            b'f' | b'F' | b'e' | b'E' | b'g' | b'G' => {
                let v = c.float(arg)?;
                arg += 1;
                let p = prec.unwrap_or(6);
                match conv {
                    b'f' | b'F' => format!("{v:.p$}"),
                    b'e' | b'E' => format!("{v:.p$e}"),
                    _ => format!("{v}"),
                }
                .into_bytes()
            }
            other => {
                return Err(Stop::Unsupported {
                    message: format!("format conversion '%{}'", other as char),
                    span: c.span,
                })
            }
        };
        let pad = width.saturating_sub(body.len());
        if left {
            out.extend_from_slice(&body);
            out.extend(std::iter::repeat_n(b' ', pad));
        } else if zero && conv != b's' && conv != b'c' {
            let (sign, digits) = match body.first() {
                Some(b'-' | b'+') => body.split_at(1),
                _ => body.split_at(0),
            };
            out.extend_from_slice(sign);
            out.extend(std::iter::repeat_n(b'0', pad));
            out.extend_from_slice(digits);
        } else {
            out.extend(std::iter::repeat_n(b' ', pad));
            out.extend_from_slice(&body);
        }
    }
    Ok(out)
}
