public class F08Trailing {
    /**
     * Scans the table and updates summary counters.
     */
    public void scan() {
        reset(); // clear previous counters
        advance();
        tally();
        finish();
        wrap();
    }
}
