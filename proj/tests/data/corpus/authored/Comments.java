/* leading block */
// line comment
package corpus; /* trailing */

/***/
/**/
class Comments {
    /** doc */ int a; // after
    /*
     * multi
     */
    int b;
}
