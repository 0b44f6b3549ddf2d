use super::*;
use crate::frontend::ast::{Expr, ExprKind, UnaryOp};

fn unit(src: &str) -> TypedUnit {
    compile_str(src).unwrap_or_else(|e| panic!("{e}"))
}

fn find(u: &TypedUnit, pred: impl Fn(&Expr) -> bool) -> &Expr {
    u.ast.expressions().into_iter().find(|e| pred(e)).expect("expression present")
}

#[test]
fn file_deref_is_opaque() {
    let u = unit(
        "#include <stdio.h>\nFILE *p;\nint always_false_in_this_configuration(void);\n\
         void f(void) { if (always_false_in_this_configuration()) { FILE f = *p; } }",
    );
    let deref = find(&u, |e| matches!(e.kind, ExprKind::Unary { op: UnaryOp::Deref, .. }));
    assert!(u.expr_type(deref).is_opaque("FILE"));
    let p = find(&u, |e| e.as_ident() == Some("p"));
    assert!(u.expr_type(p).is_file_pointer());
    assert_eq!(u.pre.system_includes.len(), 1);
}

#[test]
fn parameter_assignment_target() {
    let u = unit("void f(uint32_t x) { if (x < 0) { x = 0; } }");
    let target = find(&u, |e| matches!(e.kind, ExprKind::Assign { .. }));
    let ExprKind::Assign { lhs, .. } = &target.kind else { unreachable!() };
    let s = u.symbol_of(lhs).unwrap();
    assert!(s.is_parameter);
    assert_eq!(s.ty.int_kind(), Some(IntKind::UInt));
}

#[test]
fn unused_declaration_is_fine() {
    let u = unit("void f(void) { int y; }");
    let info = u.function_info("f").unwrap();
    assert_eq!(info.locals.len(), 1);
    assert!(!u.symbol(info.locals[0]).defined);
}

#[test]
fn fatal_errors() {
    let msg = |s: &str| compile_str(s).unwrap_err().message().to_string();
    assert!(msg("int f(void) { return y; }").contains("undeclared identifier 'y'"));
    assert!(msg("int g(int a); int f(void) { return g(1, 2); }").contains("expects 1 argument"));
    assert!(msg("void f(void) { int a[2]; int b[2]; a = b; }").contains("assignment to array"));
    assert!(msg("void f(int n) { int a[n]; }").contains("outside the MiniC subset"));
    assert!(msg("enum { A = 2147483647 + 1 };").contains("overflow"));
}

#[test]
fn enumerators_and_sizeof() {
    let u = unit("enum E { A, B = 5, C }; struct s { char c; long l; }; unsigned long n = sizeof(struct s);");
    let vals: Vec<i128> = u.symbols.iter().filter(|s| s.storage == Storage::Enumerator).map(|s| s.enum_value.unwrap()).collect();
    assert_eq!(vals, vec![0, 5, 6]);
    let sz = find(&u, |e| matches!(e.kind, ExprKind::SizeofType(_)));
    assert_eq!(u.sizeof_value(sz), Some(16));
}

#[test]
fn literal_types() {
    use resolve::literal_kind;
    assert_eq!(literal_kind(1, false, false, true), IntKind::Int);
    assert_eq!(literal_kind(0xFFFF_FFFF, false, false, false), IntKind::UInt);
    assert_eq!(literal_kind(0xFFFF_FFFF, false, false, true), IntKind::Long);
    assert_eq!(literal_kind(1, true, false, true), IntKind::UInt);
}

#[test]
fn implicit_conversions_recorded() {
    let u = unit("int f(char c) { return c + 1; }");
    let c = find(&u, |e| e.as_ident() == Some("c"));
    assert_eq!(u.expr_type(c).int_kind(), Some(IntKind::Char));
    assert_eq!(u.converted_type(c).int_kind(), Some(IntKind::Int));
}

#[test]
fn unsigned_comparison_folds_like_c() {
    let u = unit("int x = -1 < 0U;");
    let cmp = find(&u, |e| matches!(e.kind, ExprKind::Binary { .. }));
    assert_eq!(u.const_value(cmp, false), Ok(0));
}

#[test]
fn address_taken_and_tags() {
    let u = unit("void g(int *p); void f(void) { int a; int b; g(&a); b = 0; errno = 0; }");
    let info = u.function_info("f").unwrap();
    let a = u.symbol(info.locals[0]);
    let b = u.symbol(info.locals[1]);
    assert!(a.address_taken && !b.address_taken);
    assert_eq!(u.global("errno").unwrap().libc_tag, Some(LibcTag::ErrnoObject));
    assert_eq!(u.global("fopen").unwrap().libc_tag, Some(LibcTag::StreamAcquire));
}

struct TableDefs<'a>(Vec<(&'a str, Vec<ReachingDef<'a>>)>);

impl<'a> ReachingDefs<'a> for TableDefs<'a> {
    fn defs_for(&self, read: &Expr) -> Option<Vec<ReachingDef<'a>>> {
        let name = read.as_ident()?;
        self.0.iter().find(|(n, _)| *n == name).map(|(_, d)| d.clone())
    }
}

/// The five-case table for the EOF-domain classification.
#[test]
fn eof_domain_table() {
    let u = unit(
        "void f(FILE *fp, char *buf) { int c = fgetc(fp); char d = buf[0]; int m; \
         isdigit(fgetc(fp)); isdigit((unsigned char)d); isdigit(d); isdigit(c); m = fgetc(fp); isdigit(m); }",
    );
    let args: Vec<&Expr> = u
        .ast
        .expressions()
        .into_iter()
        .filter(|e| matches!(&e.kind, ExprKind::Call { callee, .. } if callee.as_ident() == Some("isdigit")))
        .map(|e| match &e.kind {
            ExprKind::Call { args, .. } => &args[0],
            _ => unreachable!(),
        })
        .collect();
    let fgetc_calls: Vec<&Expr> = u
        .ast
        .expressions()
        .into_iter()
        .filter(|e| matches!(&e.kind, ExprKind::Call { callee, .. } if callee.as_ident() == Some("fgetc")))
        .collect();
    let defs = TableDefs(vec![
        ("c", vec![ReachingDef::Value(fgetc_calls[0])]),
        ("m", vec![ReachingDef::Value(fgetc_calls[2]), ReachingDef::Opaque]),
    ]);
    let got: Vec<EofClass> = args.iter().map(|a| eof_domain(&u, a, &defs)).collect();
    assert_eq!(
        got,
        vec![EofClass::EofAble, EofClass::UcharSafe, EofClass::Unsafe, EofClass::EofAble, EofClass::Unsafe]
    );
}
