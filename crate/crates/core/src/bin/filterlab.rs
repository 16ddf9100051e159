fn main() {
    // Wired up in cli.rs once the library surface is complete.
}
