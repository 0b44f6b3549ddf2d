//! The builtin library profile. System headers are never read; instead this
//! profile supplies the declarations, macros and semantic tags the checks
//! and the interpreter need.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::types::{IntKind, TypeKind, TypeRepr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LibcTag {
    OpaqueStreamType,
    StreamAcquire,
    StreamRelease,
    EofProducing,
    EofDomainConsumer,
    MemoryAcquire,
    MemoryRelease,
    StringFamily,
    ErrnoSetting,
    ErrnoObject,
    UnmodifiedReturn,
}

impl fmt::Display for LibcTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LibcTag::OpaqueStreamType => "opaque-stream-type",
            LibcTag::StreamAcquire => "stream-acquire",
            LibcTag::StreamRelease => "stream-release",
            LibcTag::EofProducing => "eof-producing",
            LibcTag::EofDomainConsumer => "eof-domain-consumer",
            LibcTag::MemoryAcquire => "memory-acquire",
            LibcTag::MemoryRelease => "memory-release",
            LibcTag::StringFamily => "string-family",
            LibcTag::ErrnoSetting => "errno-setting",
            LibcTag::ErrnoObject => "errno-object",
            LibcTag::UnmodifiedReturn => "unmodified-return",
        };
        f.write_str(s)
    }
}

/// Name-to-tag table plus the declarations that give those names types.
#[derive(Debug, Clone)]
pub struct LibcProfile {
    pub tags: BTreeMap<String, LibcTag>,
    /// Declarations in MiniC syntax, parsed like user code.
    pub prelude: String,
    /// Type names available before any declaration.
    pub typedefs: Vec<(String, TypeRepr)>,
    /// Object-like macros such as `EOF` and `NULL`.
    pub macros: Vec<(String, String)>,
}

const TAGS: &[(&str, LibcTag)] = &[
    ("FILE", LibcTag::OpaqueStreamType),
    ("fopen", LibcTag::StreamAcquire),
    ("tmpfile", LibcTag::StreamAcquire),
    ("fclose", LibcTag::StreamRelease),
    ("fgetc", LibcTag::EofProducing),
    ("getc", LibcTag::EofProducing),
    ("getchar", LibcTag::EofProducing),
    ("isalnum", LibcTag::EofDomainConsumer),
    ("isalpha", LibcTag::EofDomainConsumer),
    ("isblank", LibcTag::EofDomainConsumer),
    ("iscntrl", LibcTag::EofDomainConsumer),
    ("isdigit", LibcTag::EofDomainConsumer),
    ("isgraph", LibcTag::EofDomainConsumer),
    ("islower", LibcTag::EofDomainConsumer),
    ("isprint", LibcTag::EofDomainConsumer),
    ("ispunct", LibcTag::EofDomainConsumer),
    ("isspace", LibcTag::EofDomainConsumer),
    ("isupper", LibcTag::EofDomainConsumer),
    ("isxdigit", LibcTag::EofDomainConsumer),
    ("tolower", LibcTag::EofDomainConsumer),
    ("toupper", LibcTag::EofDomainConsumer),
    ("malloc", LibcTag::MemoryAcquire),
    ("calloc", LibcTag::MemoryAcquire),
    ("realloc", LibcTag::MemoryAcquire),
    ("free", LibcTag::MemoryRelease),
    ("memcmp", LibcTag::StringFamily),
    ("memchr", LibcTag::StringFamily),
    ("strchr", LibcTag::StringFamily),
    ("strrchr", LibcTag::StringFamily),
    ("strstr", LibcTag::StringFamily),
    ("strpbrk", LibcTag::StringFamily),
    ("strcmp", LibcTag::StringFamily),
    ("strtod", LibcTag::ErrnoSetting),
    ("strtof", LibcTag::ErrnoSetting),
    ("strtold", LibcTag::ErrnoSetting),
    ("strtol", LibcTag::ErrnoSetting),
    ("strtoll", LibcTag::ErrnoSetting),
    ("strtoul", LibcTag::ErrnoSetting),
    ("strtoull", LibcTag::ErrnoSetting),
    ("errno", LibcTag::ErrnoObject),
    ("asctime", LibcTag::UnmodifiedReturn),
    ("ctime", LibcTag::UnmodifiedReturn),
    ("gmtime", LibcTag::UnmodifiedReturn),
    ("localtime", LibcTag::UnmodifiedReturn),
    ("setlocale", LibcTag::UnmodifiedReturn),
    ("strerror", LibcTag::UnmodifiedReturn),
];

const PRELUDE: &str = "\
struct tm { int tm_sec; int tm_min; int tm_hour; int tm_mday; int tm_mon; int tm_year; int tm_wday; int tm_yday; int tm_isdst; };
extern int errno;
extern FILE *stdin;
extern FILE *stdout;
extern FILE *stderr;
FILE *fopen(const char *path, const char *mode);
FILE *tmpfile(void);
int fclose(FILE *stream);
int fflush(FILE *stream);
int feof(FILE *stream);
int ferror(FILE *stream);
int fgetc(FILE *stream);
int getc(FILE *stream);
int getchar(void);
int ungetc(int c, FILE *stream);
int fputc(int c, FILE *stream);
int putc(int c, FILE *stream);
int putchar(int c);
char *fgets(char *s, int n, FILE *stream);
int fputs(const char *s, FILE *stream);
int puts(const char *s);
size_t fread(void *p, size_t size, size_t n, FILE *stream);
size_t fwrite(const void *p, size_t size, size_t n, FILE *stream);
int printf(const char *format, ...);
int fprintf(FILE *stream, const char *format, ...);
int sprintf(char *s, const char *format, ...);
int snprintf(char *s, size_t n, const char *format, ...);
int remove(const char *path);
int isalnum(int c);
int isalpha(int c);
int isblank(int c);
int iscntrl(int c);
int isdigit(int c);
int isgraph(int c);
int islower(int c);
int isprint(int c);
int ispunct(int c);
int isspace(int c);
int isupper(int c);
int isxdigit(int c);
int tolower(int c);
int toupper(int c);
void *malloc(size_t n);
void *calloc(size_t n, size_t size);
void *realloc(void *p, size_t n);
void free(void *p);
void exit(int status);
void abort(void);
int abs(int x);
long labs(long x);
int atoi(const char *s);
double strtod(const char *s, char **end);
float strtof(const char *s, char **end);
long double strtold(const char *s, char **end);
long strtol(const char *s, char **end, int base);
long long strtoll(const char *s, char **end, int base);
unsigned long strtoul(const char *s, char **end, int base);
unsigned long long strtoull(const char *s, char **end, int base);
int memcmp(const void *a, const void *b, size_t n);
void *memchr(const void *s, int c, size_t n);
void *memcpy(void *d, const void *s, size_t n);
void *memmove(void *d, const void *s, size_t n);
void *memset(void *s, int c, size_t n);
char *strchr(const char *s, int c);
char *strrchr(const char *s, int c);
char *strstr(const char *h, const char *n);
char *strpbrk(const char *s, const char *accept);
int strcmp(const char *a, const char *b);
int strncmp(const char *a, const char *b, size_t n);
size_t strlen(const char *s);
char *strcpy(char *d, const char *s);
char *strncpy(char *d, const char *s, size_t n);
char *strcat(char *d, const char *s);
char *strerror(int e);
time_t time(time_t *t);
char *asctime(const struct tm *t);
char *ctime(const time_t *t);
struct tm *gmtime(const time_t *t);
struct tm *localtime(const time_t *t);
char *setlocale(int category, const char *locale);
";

const MACROS: &[(&str, &str)] = &[
    ("EOF", "(-1)"),
    ("NULL", "((void *)0)"),
    ("bool", "_Bool"),
    ("true", "1"),
    ("false", "0"),
    ("EXIT_SUCCESS", "0"),
    ("EXIT_FAILURE", "1"),
    ("CHAR_BIT", "8"),
    ("SCHAR_MIN", "(-128)"),
    ("SCHAR_MAX", "127"),
    ("UCHAR_MAX", "255"),
    ("CHAR_MIN", "(-128)"),
    ("CHAR_MAX", "127"),
    ("SHRT_MIN", "(-32768)"),
    ("SHRT_MAX", "32767"),
    ("USHRT_MAX", "65535"),
    ("INT_MIN", "(-2147483647 - 1)"),
    ("INT_MAX", "2147483647"),
    ("UINT_MAX", "4294967295U"),
    ("LONG_MAX", "9223372036854775807L"),
    ("LONG_MIN", "(-9223372036854775807L - 1)"),
    ("ULONG_MAX", "18446744073709551615UL"),
    ("INT8_MAX", "127"),
    ("UINT8_MAX", "255"),
    ("INT16_MAX", "32767"),
    ("UINT16_MAX", "65535"),
    ("INT32_MAX", "2147483647"),
    ("UINT32_MAX", "4294967295U"),
    ("ERANGE", "34"),
    ("EDOM", "33"),
    ("LC_ALL", "6"),
];

impl Default for LibcProfile {
    fn default() -> Self {
        use IntKind::*;
        let int = |k| TypeRepr::int(k);
        let typedefs = vec![
            ("FILE".to_string(), TypeKind::Opaque("FILE".into()).into()),
            ("size_t".to_string(), int(ULong)),
            ("ptrdiff_t".to_string(), int(Long)),
            ("time_t".to_string(), int(Long)),
            ("int8_t".to_string(), int(SChar)),
            ("uint8_t".to_string(), int(UChar)),
            ("int16_t".to_string(), int(Short)),
            ("uint16_t".to_string(), int(UShort)),
            ("int32_t".to_string(), int(Int)),
            ("uint32_t".to_string(), int(UInt)),
            ("int64_t".to_string(), int(Long)),
            ("uint64_t".to_string(), int(ULong)),
            ("intptr_t".to_string(), int(Long)),
            ("uintptr_t".to_string(), int(ULong)),
        ];
        LibcProfile {
            tags: TAGS.iter().map(|(n, t)| (n.to_string(), *t)).collect(),
            prelude: PRELUDE.to_string(),
            typedefs,
            macros: MACROS.iter().map(|(n, v)| (n.to_string(), v.to_string())).collect(),
        }
    }
}

impl LibcProfile {
    pub fn tag(&self, name: &str) -> Option<LibcTag> {
        self.tags.get(name).copied()
    }

    pub fn typedef_names(&self) -> Vec<&str> {
        self.typedefs.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Names carrying `tag`, sorted.
    pub fn names_with(&self, tag: LibcTag) -> Vec<&str> {
        self.tags.iter().filter(|(_, t)| **t == tag).map(|(n, _)| n.as_str()).collect()
    }
}
